//! Manufactured-solution convergence study.
//!
//! The target is `v*(t) = e^{-λt} W` for a fixed divergence-free profile `W`.
//! Substituting it into the momentum equation gives the forcing
//!
//! ```text
//! f(t) = e^{-λt} (ν|k|^{2s} − λ) Ŵ + e^{-2λt} P[N(filter W, W)]
//! ```
//!
//! so the discrete solution should track `v*` up to the time-stepping error.

use crate::error::{Error, Result};
use crate::fractional::{helmholtz_filter, leray_project_in_place, PhysParams};
use crate::grid::{Grid, SpectralField};
use crate::integrate::{integrate, IntegratorConfig, Scheme};
use crate::rhs::{linear_operator, nonlinear_terms, Forcing, RhsOptions, SimState};

use super::scenarios::taylor_green;

/// Taylor–Green plus `secondary` times a divergence-free mode on `(1, 2)`,
/// which keeps the projected nonlinearity from vanishing identically.
pub fn manufactured_profile(grid: &Grid, secondary: f64) -> SpectralField {
    let mut w = taylor_green(grid, 1.0);
    if secondary != 0.0 {
        let k0 = grid.spec().fundamental();
        let dim = grid.dim();
        let extra = crate::grid::RealField::from_fn(grid.spec(), dim, |x, c| {
            let ph = (k0 * (x[0] + 2.0 * x[1])).sin();
            secondary
                * match (dim, c) {
                    (2, 0) => -2.0 * ph,
                    (2, 1) => ph,
                    (3, 2) => ph,
                    _ => 0.0,
                }
        });
        let mut e = grid.forward(&extra).expect("field sampled on the grid");
        leray_project_in_place(grid, &mut e);
        grid.dealias(&mut e);
        w.axpy(1.0, &e);
    }
    w
}

/// Forcing that makes `e^{-λt} W` an exact solution.
pub struct ManufacturedSolution {
    profile: SpectralField,
    lambda: f64,
    linear_part: SpectralField,
    nonlinear_part: SpectralField,
}

impl ManufacturedSolution {
    pub fn new(grid: &Grid, params: &PhysParams, profile: SpectralField, lambda: f64) -> Self {
        // −linear_operator is ν|k|^{2s}.
        let weights: Vec<f64> = linear_operator(grid, params)
            .into_iter()
            .map(|l| -l - lambda)
            .collect();
        let mut linear_part = profile.clone();
        linear_part.apply_diagonal(&weights);
        let u = helmholtz_filter(grid, &profile, params.alpha());
        let mut nonlinear_part = nonlinear_terms(grid, &u, &profile);
        leray_project_in_place(grid, &mut nonlinear_part);
        Self {
            profile,
            lambda,
            linear_part,
            nonlinear_part,
        }
    }

    pub fn exact(&self, t: f64) -> SpectralField {
        self.profile.scaled((-self.lambda * t).exp())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Forcing for ManufacturedSolution {
    fn evaluate(&self, t: f64, _grid: &Grid) -> SpectralField {
        let mut f = self.linear_part.scaled((-self.lambda * t).exp());
        f.axpy((-2.0 * self.lambda * t).exp(), &self.nonlinear_part);
        f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub scheme: Scheme,
    pub dts: Vec<f64>,
    /// Global `L²` error at `t_end` for each `dt`.
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log dt`.
    pub order: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// Runs the study from `t = 0` to `t_end` for each step size.
///
/// The step sizes must be strictly decreasing (at least three); errors that
/// fail to decrease along with them are reported as
/// [`Error::NonMonotoneErrors`].
pub fn manufactured_run(
    grid: &Grid,
    params: &PhysParams,
    scheme: Scheme,
    solution: &ManufacturedSolution,
    t_end: f64,
    dts: &[f64],
) -> Result<ConvergenceReport> {
    if dts.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "a convergence study needs at least 3 step sizes, got {}",
            dts.len()
        )));
    }
    if !(solution.lambda() > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be > 0, got {}",
            solution.lambda()
        )));
    }
    if dts.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter(
            "step sizes must be strictly decreasing".into(),
        ));
    }
    let exact = solution.exact(t_end);
    let opts = RhsOptions {
        nonlinear: true,
        forcing: Some(solution),
    };
    let mut errors = Vec::with_capacity(dts.len());
    for &dt in dts {
        let cfg = IntegratorConfig::new(scheme, dt, t_end, usize::MAX)?;
        let out = integrate(
            SimState::new(0.0, solution.exact(0.0)),
            params,
            grid,
            &cfg,
            opts,
            |_, _| {},
        )?;
        let mut diff = out.into_v_hat();
        diff.axpy(-1.0, &exact);
        errors.push(grid.norm_l2(&diff));
    }
    if errors.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::NonMonotoneErrors(errors));
    }
    let order = loglog_slope(dts, &errors);
    Ok(ConvergenceReport {
        scheme,
        dts: dts.to_vec(),
        errors,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn slope_of_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(4)).collect();
        assert!((loglog_slope(&x, &y) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn forcing_vanishes_at_the_natural_decay_rate() {
        // Pure Taylor–Green: projected nonlinearity is a gradient, and with
        // λ = ν|k|^{2s} the linear part cancels too.
        let g = Grid::new(GridSpec::periodic(2, 16).unwrap());
        let p = PhysParams::new(0.75, 0.1, 0.3, 2).unwrap();
        let lambda = 0.1 * 2f64.powf(0.75);
        let m = ManufacturedSolution::new(&g, &p, manufactured_profile(&g, 0.0), lambda);
        let f = m.evaluate(0.3, &g);
        assert!(f.coefficient_norm() < 1e-14, "{}", f.coefficient_norm());
    }

    #[test]
    fn study_rejects_bad_inputs() {
        let g = Grid::new(GridSpec::periodic(2, 16).unwrap());
        let p = PhysParams::new(0.75, 0.1, 0.3, 2).unwrap();
        let m = ManufacturedSolution::new(&g, &p, manufactured_profile(&g, 0.5), 1.0);
        assert!(manufactured_run(&g, &p, Scheme::IfRk4, &m, 1.0, &[0.1, 0.05]).is_err());
        assert!(manufactured_run(&g, &p, Scheme::IfRk4, &m, 1.0, &[0.1, 0.2, 0.05]).is_err());
    }

    #[test]
    fn euler_is_first_order() {
        let g = Grid::new(GridSpec::periodic(2, 16).unwrap());
        let p = PhysParams::new(0.75, 0.1, 0.3, 2).unwrap();
        let m = ManufacturedSolution::new(&g, &p, manufactured_profile(&g, 0.5), 1.0);
        let r = manufactured_run(&g, &p, Scheme::IfEuler, &m, 0.5, &[0.02, 0.01, 0.005]).unwrap();
        assert!((r.order - 1.0).abs() <= 0.25, "{r:?}");
    }
}
