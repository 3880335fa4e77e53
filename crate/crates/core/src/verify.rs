//! Compact identity and property suite behind `fchs verify`. Each check is
//! small enough that the whole suite runs in seconds.

use std::f64::consts::PI;
use std::fmt;

use crate::checkpoint;
use crate::diagnostics::{filter_ladder_residual, DiagnosticsRecorder};
use crate::fractional::{
    self, gagliardo_seminorm_oracle, helmholtz_filter, kernel_constant, leray_project,
    normalization_constant, PatchExtension, PhysParams,
};
use crate::grid::{Grid, GridSpec, RealField, SpectralField};
use crate::integrate::{integrate, IntegratorConfig, Scheme};
use crate::rhs::{self, RhsOptions, SimState};
use crate::runner::manufactured::{manufactured_profile, manufactured_run, ManufacturedSolution};
use crate::runner::scenarios::{random_divfree, taylor_green};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check {
        name,
        passed: worst <= tol,
        detail: format!("worst {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn grid(dim: usize, n: usize) -> Grid {
    Grid::new(GridSpec::periodic(dim, n).expect("valid grid"))
}

pub fn run_suite() -> Vec<Check> {
    vec![
        transform_round_trip(),
        parseval(),
        filter_identity(),
        trilinear_cancellation(),
        projection(),
        normalization(),
        linear_exactness(),
        energy_budget(),
        gagliardo_equivalence(),
        checkpoint_round_trip(),
        temporal_order(),
    ]
}

fn transform_round_trip() -> Check {
    let g = grid(2, 32);
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let v = random_divfree(&g, 1.0, seed, 1.0, 10.0);
        let back = match g.inverse(&v).and_then(|x| g.forward(&x)) {
            Ok(b) => b,
            Err(e) => {
                return Check {
                    name: "transform round trip",
                    passed: false,
                    detail: e.to_string(),
                }
            }
        };
        let mut d = back;
        d.axpy(-1.0, &v);
        worst = worst.max(d.max_abs() / v.max_abs());
    }
    check("transform round trip", worst, 1e-13)
}

fn parseval() -> Check {
    let g = grid(2, 32);
    let h2 = g.spec().spacing().powi(2);
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let v = random_divfree(&g, 1.0, seed, 1.0, 10.0);
        let phys = g.inverse(&v).expect("symmetric field");
        let direct: f64 = phys.components.iter().flatten().map(|x| x * x).sum::<f64>() * h2;
        worst = worst.max((direct - g.norm_sq(&v)).abs() / direct);
    }
    check("Parseval", worst, 1e-13)
}

fn corpus(dim: usize, n: usize, count: u64) -> (Grid, Vec<SpectralField>) {
    let g = grid(dim, n);
    let band = g.spec().dealias_cutoff() as f64;
    let fields = (0..count).map(|s| random_divfree(&g, 1.0, 1000 + s, 1.0, band)).collect();
    (g, fields)
}

fn filter_identity() -> Check {
    let (g, fields) = corpus(2, 32, 20);
    let mut worst: f64 = 0.0;
    for v in &fields {
        for alpha in [0.1, 1.0, 2.0] {
            for m in 0..=2 {
                worst = worst.max(filter_ladder_residual(&g, v, alpha, m));
            }
        }
    }
    check("filter identity", worst, 1e-12)
}

fn trilinear_cancellation() -> Check {
    let (g, fields) = corpus(2, 32, 20);
    let mut worst: f64 = 0.0;
    for v in &fields {
        for alpha in [0.1, 1.0, 2.0] {
            let u = helmholtz_filter(&g, v, alpha);
            let (val, scale) = rhs::trilinear_residual(&g, &u, v);
            worst = worst.max(val.abs() / scale);
        }
    }
    check("trilinear cancellation", worst, 1e-11)
}

fn projection() -> Check {
    let g = grid(3, 16);
    let phys = RealField::from_fn(g.spec(), 3, |x, c| {
        (x[0] + 2.0 * x[1]).sin() * (c as f64 + 1.0) + (x[2] - x[c]).cos()
    });
    let raw = g.forward(&phys).expect("sampled field");
    let p1 = leray_project(&g, &raw);
    let p2 = leray_project(&g, &p1);
    let mut d = p2;
    d.axpy(-1.0, &p1);
    let idem = d.max_abs() / p1.max_abs();
    let div = g.max_divergence(&p1) / p1.max_abs();
    check("Leray projection", idem.max(div), 1e-13)
}

fn normalization() -> Check {
    let a = normalization_constant(2, 0.5).unwrap_or(f64::NAN);
    let b = normalization_constant(3, 0.5).unwrap_or(f64::NAN);
    let worst = ((a - 1.0 / PI) * PI).abs().max(((b - 2.0 / (PI * PI)) * PI * PI / 2.0).abs());
    check("normalization constant", worst, 1e-10)
}

fn linear_exactness() -> Check {
    let g = grid(2, 16);
    let mut worst: f64 = 0.0;
    for (s, m, nu, t_end) in [(0.5, [1, 0], 1.0, 1.0), (0.75, [2, 1], 0.1, 2.0), (0.9, [3, 3], 0.05, 0.5)] {
        let p = PhysParams::new(s, nu, 0.3, 2).expect("valid parameters");
        let mut v = SpectralField::zeros(2, g.spec());
        let perp = [-(m[1] as f64), m[0] as f64];
        for mm in [m, [-m[0], -m[1]]] {
            let idx = g.index_of(&mm).expect("mode on grid");
            for c in 0..2 {
                v.components[c][idx] = perp[c].into();
            }
        }
        let cfg = IntegratorConfig::new(Scheme::IfRk4, 0.1, t_end, 1).expect("valid config");
        let out = integrate(SimState::new(0.0, v.clone()), &p, &g, &cfg, RhsOptions::linear_only(), |_, _| {})
            .expect("finite");
        let kmag = ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
        let want = (-nu * kmag.powf(2.0 * s) * t_end).exp();
        let got = out.v_hat().coefficient_norm() / v.coefficient_norm();
        worst = worst.max((got - want).abs() / want);
    }
    check("linear exactness", worst, 1e-13)
}

fn energy_budget() -> Check {
    let g = grid(2, 32);
    let p = PhysParams::new(0.75, 0.01, 0.2, 2).expect("valid parameters");
    let mut v = taylor_green(&g, 1.0);
    v.axpy(0.3, &random_divfree(&g, 1.0, 8, 1.0, 4.0));
    let cfg = IntegratorConfig::new(Scheme::IfRk4, 1e-3, 0.1, 1).expect("valid config");
    let mut rec = DiagnosticsRecorder::new(p);
    let out = integrate(SimState::new(0.0, v), &p, &g, &cfg, RhsOptions::default(), |st, _| {
        rec.sample(&g, st)
    });
    if let Err(e) = out {
        return Check {
            name: "energy budget",
            passed: false,
            detail: e.to_string(),
        };
    }
    let budget = rec.records().last().map_or(f64::NAN, |r| r.budget_residual);
    let rising = rec
        .records()
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(f64::NEG_INFINITY, f64::max);
    Check {
        name: "energy budget",
        passed: budget <= 1e-6 && rising <= 1e-9,
        detail: format!("budget residual {budget:.3e}, largest energy increase {rising:.3e}"),
    }
}

fn gagliardo_equivalence() -> Check {
    let spec = GridSpec::new(2, 48, 16.0).expect("valid grid");
    let g = Grid::new(spec);
    let c = 0.5 * spec.box_length();
    let f = RealField::from_fn(&spec, 1, |x, _| (-(x[0] - c).powi(2) - (x[1] - c).powi(2)).exp());
    let oracle = gagliardo_seminorm_oracle(&spec, &f, 0.5, PatchExtension::ZeroExtended);
    let fhat = g.forward(&f).expect("sampled field");
    let semi = fractional::sobolev_seminorm(&g, &fhat, 0.5).unwrap_or(f64::NAN);
    let kc = kernel_constant(2, 0.5).unwrap_or(f64::NAN);
    match oracle {
        Ok(o) => {
            let multiplier = 2.0 / kc * semi * semi;
            let rel = (o * o - multiplier).abs() / multiplier;
            check("Gagliardo/Fourier equivalence", rel, 0.05)
        }
        Err(e) => Check {
            name: "Gagliardo/Fourier equivalence",
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn checkpoint_round_trip() -> Check {
    let g = grid(2, 16);
    let p = PhysParams::new(0.6, 0.1, 0.5, 2).expect("valid parameters");
    let st = SimState::new(0.25, random_divfree(&g, 1.0, 4, 1.0, 5.0));
    let bytes = checkpoint::encode(&st, &p, &g);
    let passed = match checkpoint::decode(&bytes) {
        Ok((back, bp, spec)) => {
            back.t().to_bits() == st.t().to_bits()
                && bp == p
                && &spec == g.spec()
                && back
                    .v_hat()
                    .components
                    .iter()
                    .flatten()
                    .zip(st.v_hat().components.iter().flatten())
                    .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits())
        }
        Err(_) => false,
    };
    Check {
        name: "checkpoint round trip",
        passed,
        detail: format!("{} bytes", bytes.len()),
    }
}

fn temporal_order() -> Check {
    let g = grid(2, 16);
    let p = PhysParams::new(0.75, 0.1, 0.3, 2).expect("valid parameters");
    let sol = ManufacturedSolution::new(&g, &p, manufactured_profile(&g, 0.5), 1.0);
    let mut detail = String::new();
    let mut passed = true;
    for (scheme, dts) in [
        (Scheme::IfEuler, [0.02, 0.01, 0.005]),
        (Scheme::IfRk4, [0.1, 0.05, 0.025]),
    ] {
        match manufactured_run(&g, &p, scheme, &sol, 0.5, &dts) {
            Ok(r) => {
                passed &= (r.order - f64::from(scheme.order())).abs() <= 0.25;
                detail.push_str(&format!("{scheme} order {:.3}; ", r.order));
            }
            Err(e) => {
                passed = false;
                detail.push_str(&format!("{scheme}: {e}; "));
            }
        }
    }
    Check {
        name: "temporal order",
        passed,
        detail: detail.trim_end_matches("; ").to_string(),
    }
}
