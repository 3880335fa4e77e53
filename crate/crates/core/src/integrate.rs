//! Integrating-factor time stepping. The dissipation `-ν|k|^{2s}` is diagonal
//! and integrated exactly through `exp(-ν|k|^{2s} h)`; only the projected
//! nonlinearity and forcing go through the explicit stages.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fractional::{leray_project_in_place, PhysParams};
use crate::grid::{Grid, SpectralField};
use crate::rhs::{explicit_part, linear_operator, RhsOptions, SimState};

/// Velocity floor used by [`suggest_dt`] when the flow is at rest.
pub const VELOCITY_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Lawson integrating-factor classical RK4.
    IfRk4,
    /// Integrating-factor forward Euler, the first-order reference.
    IfEuler,
}

impl Scheme {
    pub fn order(&self) -> u32 {
        match self {
            Scheme::IfRk4 => 4,
            Scheme::IfEuler => 1,
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "if_rk4" => Ok(Scheme::IfRk4),
            "if_euler" => Ok(Scheme::IfEuler),
            other => Err(Error::config(format!(
                "unknown scheme `{other}` (expected if_rk4 or if_euler)"
            ))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::IfRk4 => "if_rk4",
            Scheme::IfEuler => "if_euler",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub callback_stride: usize,
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, dt: f64, t_end: f64, callback_stride: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if !t_end.is_finite() || t_end < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "t_end must be finite and >= 0, got {t_end}"
            )));
        }
        if t_end > 0.0 && dt > t_end {
            return Err(Error::InvalidParameter(format!(
                "dt = {dt} exceeds t_end = {t_end}"
            )));
        }
        if callback_stride == 0 {
            return Err(Error::InvalidParameter(
                "callback_stride must be >= 1".into(),
            ));
        }
        Ok(Self {
            scheme,
            dt,
            t_end,
            callback_stride,
        })
    }
}

/// Per-mode `exp(-ν|k|^{2s} h)`; the zero mode gets 1.
pub fn dissipation_factor(grid: &Grid, params: &PhysParams, h: f64) -> Vec<f64> {
    linear_operator(grid, params)
        .into_iter()
        .map(|l| (l * h).exp())
        .collect()
}

/// Holds the linear operator so repeated steps of the same size reuse the
/// exponentials.
pub struct Stepper<'a> {
    grid: &'a Grid,
    params: PhysParams,
    opts: RhsOptions<'a>,
    scheme: Scheme,
    linear: Vec<f64>,
    cached: Option<(f64, Vec<f64>, Vec<f64>)>,
}

impl<'a> Stepper<'a> {
    pub fn new(grid: &'a Grid, params: &PhysParams, scheme: Scheme, opts: RhsOptions<'a>) -> Self {
        Self {
            grid,
            params: *params,
            opts,
            scheme,
            linear: linear_operator(grid, params),
            cached: None,
        }
    }

    fn factors(&mut self, h: f64) -> (Vec<f64>, Vec<f64>) {
        match &self.cached {
            Some((ch, full, half)) if *ch == h => (full.clone(), half.clone()),
            _ => {
                let full: Vec<f64> = self.linear.iter().map(|l| (l * h).exp()).collect();
                let half: Vec<f64> = self.linear.iter().map(|l| (0.5 * l * h).exp()).collect();
                self.cached = Some((h, full.clone(), half.clone()));
                (full, half)
            }
        }
    }

    fn explicit(&self, t: f64, v: &SpectralField) -> SpectralField {
        explicit_part(self.grid, &self.params, t, v, &self.opts)
    }

    /// Advance `state` by `h`, returning the new state or a blow-up report.
    pub fn step(&mut self, state: &SimState, h: f64) -> Result<SimState> {
        let t = state.t();
        let v = state.v_hat();
        let (e_full, e_half) = self.factors(h);
        let mut next = match self.scheme {
            Scheme::IfEuler => {
                let mut out = v.clone();
                out.axpy(h, &self.explicit(t, v));
                out.apply_diagonal(&e_full);
                out
            }
            Scheme::IfRk4 => {
                let k1 = self.explicit(t, v);

                let mut y = v.clone();
                y.axpy(0.5 * h, &k1);
                y.apply_diagonal(&e_half);
                let k2 = self.explicit(t + 0.5 * h, &y);

                let mut y = v.clone();
                y.apply_diagonal(&e_half);
                y.axpy(0.5 * h, &k2);
                let k3 = self.explicit(t + 0.5 * h, &y);

                let mut y = v.clone();
                y.apply_diagonal(&e_full);
                let mut k3e = k3.clone();
                k3e.apply_diagonal(&e_half);
                y.axpy(h, &k3e);
                let k4 = self.explicit(t + h, &y);

                // v⁺ = E v + h/6 (E k1 + 2 E½ (k2 + k3) + k4)
                let mut out = v.clone();
                out.apply_diagonal(&e_full);
                let mut k1e = k1;
                k1e.apply_diagonal(&e_full);
                let mut mid = k2;
                mid.axpy(1.0, &k3);
                mid.apply_diagonal(&e_half);
                out.axpy(h / 6.0, &k1e);
                out.axpy(h / 3.0, &mid);
                out.axpy(h / 6.0, &k4);
                out
            }
        };
        leray_project_in_place(self.grid, &mut next);
        if !next.is_finite() {
            return Err(Error::BlowUp {
                t: t + h,
                quantity: "|v̂_k|",
                value: next
                    .components
                    .iter()
                    .flatten()
                    .map(|c| c.norm())
                    .find(|m| !m.is_finite())
                    .unwrap_or(f64::INFINITY),
                last_good: Some(Box::new(state.clone())),
            });
        }
        Ok(SimState::new(t + h, next))
    }
}

/// One step of `cfg.dt`.
pub fn step(
    state: &SimState,
    params: &PhysParams,
    grid: &Grid,
    cfg: &IntegratorConfig,
    opts: RhsOptions<'_>,
) -> Result<SimState> {
    Stepper::new(grid, params, cfg.scheme, opts).step(state, cfg.dt)
}

/// Steps from `state0.t()` to `cfg.t_end`, shortening the final step to land
/// on `t_end` exactly.
///
/// `on_sample(state, step_index)` runs for the initial state, after every
/// `callback_stride` steps, and after the final step.
pub fn integrate(
    state0: SimState,
    params: &PhysParams,
    grid: &Grid,
    cfg: &IntegratorConfig,
    opts: RhsOptions<'_>,
    mut on_sample: impl FnMut(&SimState, usize),
) -> Result<SimState> {
    let t0 = state0.t();
    let span = cfg.t_end - t0;
    on_sample(&state0, 0);
    if span <= 0.0 {
        return Ok(state0);
    }
    let n_steps = ((span / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut stepper = Stepper::new(grid, params, cfg.scheme, opts);
    let mut state = state0;
    for i in 1..=n_steps {
        // Interior steps use `dt` itself and accumulate time step by step, so
        // a run restarted from any intermediate state retraces the same
        // arithmetic bit for bit.
        let t_next = if i == n_steps {
            cfg.t_end
        } else {
            state.t() + cfg.dt
        };
        let h = if i == n_steps { t_next - state.t() } else { cfg.dt };
        let mut next = stepper.step(&state, h)?;
        next.set_t(t_next);
        state = next;
        if i % cfg.callback_stride == 0 || i == n_steps {
            on_sample(&state, i);
        }
    }
    Ok(state)
}

/// `cfl · Δx / max(|u|_∞, VELOCITY_FLOOR)` with `u` the filtered velocity.
pub fn suggest_dt(state: &SimState, params: &PhysParams, grid: &Grid, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cfl must lie in (0, 1], got {cfl}"
        )));
    }
    let u = grid.inverse_unchecked(&state.u_hat(grid, params.alpha()));
    let mut umax = 0.0_f64;
    for x in 0..grid.len() {
        let mag: f64 = u.components.iter().map(|c| c[x] * c[x]).sum::<f64>().sqrt();
        umax = umax.max(mag);
    }
    Ok(cfl * grid.spec().spacing() / umax.max(VELOCITY_FLOOR))
}
