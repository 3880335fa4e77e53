//! Energy functionals, identity residuals and norm ladders, plus the CSV
//! stream they are written to.
//!
//! `E = ‖u‖² + α²‖∇u‖²` and `D = ‖Λ^s u‖² + α²‖∇Λ^s u‖²` satisfy
//! `dE/dt = -2νD` for the unforced system; the ledger integrates `D` in time
//! with the trapezoid rule so the balance can be checked along a run.

use std::io::Write;

use crate::error::Result;
use crate::fractional::{self, helmholtz_filter, PhysParams};
use crate::grid::{Grid, SpectralField};
use crate::rhs::{self, SimState};

pub const CSV_HEADER: [&str; 10] = [
    "t",
    "energy",
    "dissipation",
    "budget_residual",
    "l2_v",
    "hs_v",
    "helmholtz_residual",
    "max_divergence",
    "ladyzhenskaya_ratio",
    "trilinear_residual",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub budget_residual: f64,
    pub l2_v: f64,
    pub hs_v: f64,
    pub helmholtz_residual: f64,
    pub max_divergence: f64,
    pub ladyzhenskaya_ratio: f64,
    pub trilinear_residual: f64,
}

impl DiagnosticsRecord {
    pub fn values(&self) -> [f64; 10] {
        [
            self.t,
            self.energy,
            self.dissipation,
            self.budget_residual,
            self.l2_v,
            self.hs_v,
            self.helmholtz_residual,
            self.max_divergence,
            self.ladyzhenskaya_ratio,
            self.trilinear_residual,
        ]
    }

    pub fn from_values(v: [f64; 10]) -> Self {
        Self {
            t: v[0],
            energy: v[1],
            dissipation: v[2],
            budget_residual: v[3],
            l2_v: v[4],
            hs_v: v[5],
            helmholtz_residual: v[6],
            max_divergence: v[7],
            ladyzhenskaya_ratio: v[8],
            trilinear_residual: v[9],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// Time series of `(t, E, D)` with the running trapezoid integral of `D`.
#[derive(Debug, Clone, Default)]
pub struct EnergyLedger {
    samples: Vec<(f64, f64, f64)>,
    integral: f64,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ledger continuing from a saved integral and its latest sample.
    pub fn from_parts(integral: f64, last: (f64, f64, f64)) -> Self {
        Self {
            samples: vec![last],
            integral,
        }
    }

    /// Appends a sample; times must be strictly increasing.
    pub fn push(&mut self, t: f64, energy: f64, dissipation: f64) {
        if let Some(&(t_prev, _, d_prev)) = self.samples.last() {
            assert!(t > t_prev, "ledger times must increase ({t_prev} -> {t})");
            self.integral += 0.5 * (t - t_prev) * (d_prev + dissipation);
        }
        self.samples.push((t, energy, dissipation));
    }

    pub fn samples(&self) -> &[(f64, f64, f64)] {
        &self.samples
    }

    /// `∫ D dt` over the sampled span.
    pub fn dissipation_integral(&self) -> f64 {
        self.integral
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Budget residual, flagged absolute when `E(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetResidual {
    pub value: f64,
    pub absolute: bool,
}

/// `|E(t) + 2ν∫₀ᵗ D − E(0)| / E(0)` at the latest sample.
///
/// # Panics
/// If the ledger is empty.
pub fn budget_residual(ledger: &EnergyLedger, e0: f64, nu: f64) -> BudgetResidual {
    let &(_, e_now, _) = ledger.samples().last().expect("ledger is empty");
    let raw = (e_now + 2.0 * nu * ledger.dissipation_integral() - e0).abs();
    if e0 == 0.0 {
        BudgetResidual {
            value: raw,
            absolute: true,
        }
    } else {
        BudgetResidual {
            value: raw / e0,
            absolute: false,
        }
    }
}

pub fn energy(grid: &Grid, u_hat: &SpectralField, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    grid.weighted_norm_sq(u_hat, |ksq| 1.0 + a2 * ksq)
}

pub fn dissipation(grid: &Grid, u_hat: &SpectralField, params: &PhysParams) -> f64 {
    let a2 = params.alpha() * params.alpha();
    let s = params.s();
    grid.weighted_norm_sq(u_hat, |ksq| ksq.powf(s) * (1.0 + a2 * ksq))
}

/// `|‖∇^m u‖² + 2α²‖∇^{m+1}u‖² + α⁴‖∇^{m+2}u‖² − ‖∇^m v‖²| / ‖∇^m v‖²`
/// with `u` the filtered `v`. Zero when `‖∇^m v‖ = 0`.
pub fn filter_ladder_residual(grid: &Grid, v_hat: &SpectralField, alpha: f64, m: u32) -> f64 {
    let u = helmholtz_filter(grid, v_hat, alpha);
    let a2 = alpha * alpha;
    let pw = |ksq: f64, j: u32| ksq.powi(j as i32);
    let lhs = grid.weighted_norm_sq(&u, |k| pw(k, m))
        + 2.0 * a2 * grid.weighted_norm_sq(&u, |k| pw(k, m + 1))
        + a2 * a2 * grid.weighted_norm_sq(&u, |k| pw(k, m + 2));
    let rhs = grid.weighted_norm_sq(v_hat, |k| pw(k, m));
    if rhs == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / rhs
    }
}

/// `m = 0` rung of [`filter_ladder_residual`].
pub fn helmholtz_identity_residual(grid: &Grid, v_hat: &SpectralField, alpha: f64) -> f64 {
    filter_ladder_residual(grid, v_hat, alpha, 0)
}

/// `‖∇^m v‖_{L²}` for each requested `m`.
pub fn norm_ladder(grid: &Grid, v_hat: &SpectralField, orders: &[u32]) -> Vec<f64> {
    orders
        .iter()
        .map(|&m| grid.weighted_norm_sq(v_hat, |ksq| ksq.powi(m as i32)).sqrt())
        .collect()
}

/// Evaluates every diagnostic of `state`. `budget` comes from the caller's
/// ledger, which already holds this sample.
pub fn record(
    grid: &Grid,
    state: &SimState,
    params: &PhysParams,
    budget_residual: f64,
) -> DiagnosticsRecord {
    let v = state.v_hat();
    let u = state.u_hat(grid, params.alpha());
    let (tri, scale) = rhs::trilinear_residual(grid, &u, v);
    DiagnosticsRecord {
        t: state.t(),
        energy: energy(grid, &u, params.alpha()),
        dissipation: dissipation(grid, &u, params),
        budget_residual,
        l2_v: grid.norm_l2(v),
        hs_v: fractional::sobolev_norm_hs(grid, v, params.s(), grid.dim()).unwrap_or(f64::NAN),
        helmholtz_residual: helmholtz_identity_residual(grid, v, params.alpha()),
        max_divergence: state.divergence_ratio(grid),
        ladyzhenskaya_ratio: fractional::ladyzhenskaya_ratio(grid, &u),
        trilinear_residual: if scale == 0.0 { 0.0 } else { tri.abs() / scale },
    }
}

/// Collects records and the energy ledger along a trajectory.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecorder {
    params: PhysParams,
    ledger: EnergyLedger,
    e0: Option<f64>,
    records: Vec<DiagnosticsRecord>,
}

impl DiagnosticsRecorder {
    pub fn new(params: PhysParams) -> Self {
        Self {
            params,
            ledger: EnergyLedger::new(),
            e0: None,
            records: Vec::new(),
        }
    }

    /// Continues a ledger from an earlier segment of the same run.
    pub fn resume(params: PhysParams, ledger: EnergyLedger, e0: f64) -> Self {
        Self {
            params,
            ledger,
            e0: Some(e0),
            records: Vec::new(),
        }
    }

    pub fn sample(&mut self, grid: &Grid, state: &SimState) {
        let u = state.u_hat(grid, self.params.alpha());
        let e = energy(grid, &u, self.params.alpha());
        let d = dissipation(grid, &u, &self.params);
        let e0 = *self.e0.get_or_insert(e);
        let fresh = self.ledger.samples().last().map_or(true, |s| state.t() > s.0);
        if fresh {
            self.ledger.push(state.t(), e, d);
        }
        let budget = budget_residual(&self.ledger, e0, self.params.nu()).value;
        self.records.push(record(grid, state, &self.params, budget));
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn initial_energy(&self) -> Option<f64> {
        self.e0
    }

    pub fn into_records(self) -> Vec<DiagnosticsRecord> {
        self.records
    }
}

/// Writes the header and one row per record, LF-terminated, floats in
/// shortest round-trip form.
pub fn emit_csv<W: Write>(records: &[DiagnosticsRecord], sink: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.values().iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a file written by [`emit_csv`].
pub fn read_csv<R: std::io::Read>(source: R) -> Result<Vec<DiagnosticsRecord>> {
    let mut rdr = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let mut vals = [0.0; 10];
        for (slot, field) in vals.iter_mut().zip(row.iter()) {
            *slot = field.parse().map_err(|e| {
                crate::error::Error::config(format!("bad float `{field}` in diagnostics: {e}"))
            })?;
        }
        out.push(DiagnosticsRecord::from_values(vals));
    }
    Ok(out)
}
