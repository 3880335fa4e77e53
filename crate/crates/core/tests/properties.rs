use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fchs::diagnostics::filter_ladder_residual;
use fchs::fractional::{helmholtz_filter, ladyzhenskaya_ratio, leray_project};
use fchs::runner::scenarios::random_divfree;
use fchs::{Grid, GridSpec, RealField, SpectralField};

fn grid(dim: usize, n: usize) -> Grid {
    Grid::new(GridSpec::periodic(dim, n).unwrap())
}

fn noise(grid: &Grid, ncomp: usize, seed: u64) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RealField::from_fn(grid.spec(), ncomp, |_, _| rng.random_range(-1.0..1.0))
}

fn rel_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d.coefficient_norm() / b.coefficient_norm().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn physical_round_trip(seed in any::<u64>(), dim in 2usize..=3) {
        let g = grid(dim, if dim == 2 { 32 } else { 8 });
        let f = noise(&g, 1, seed);
        let back = g.inverse(&g.forward(&f).unwrap()).unwrap();
        for (a, b) in f.components[0].iter().zip(&back.components[0]) {
            prop_assert!((a - b).abs() <= 1e-13);
        }
    }

    #[test]
    fn parseval(seed in any::<u64>()) {
        let g = grid(2, 32);
        let f = noise(&g, 2, seed);
        let h2 = g.spec().spacing().powi(2);
        let direct: f64 = f.components.iter().flatten().map(|x| x * x).sum::<f64>() * h2;
        let spectral = g.norm_sq(&g.forward(&f).unwrap());
        prop_assert!((direct - spectral).abs() <= 1e-13 * direct);
    }

    #[test]
    fn hermitian_fields_invert_to_real(seed in any::<u64>()) {
        let g = grid(2, 16);
        let v = random_divfree(&g, 1.0, seed, 0.0, 8.0);
        prop_assert!(g.hermitian_residue(&v) <= 1e-15);
        prop_assert!(g.inverse(&v).is_ok());
    }

    #[test]
    fn filter_identity_ladder(seed in any::<u64>(), alpha in 0.0f64..3.0) {
        let g = grid(2, 32);
        let v = random_divfree(&g, 1.0, seed, 1.0, 10.0);
        for m in 0..=2 {
            prop_assert!(filter_ladder_residual(&g, &v, alpha, m) <= 1e-12);
        }
        prop_assert!(g.norm_l2(&helmholtz_filter(&g, &v, alpha)) <= g.norm_l2(&v) * (1.0 + 1e-14));
    }

    #[test]
    fn projection_is_idempotent_and_solenoidal(seed in any::<u64>()) {
        let g = grid(3, 8);
        let raw = g.forward(&noise(&g, 3, seed)).unwrap();
        let p = leray_project(&g, &raw);
        prop_assert!(rel_diff(&leray_project(&g, &p), &p) <= 1e-14);
        prop_assert!(g.max_divergence(&p) <= 1e-13 * p.max_abs());
        prop_assert!(g.norm_l2(&p) <= g.norm_l2(&raw) * (1.0 + 1e-14));
    }
}

/// Largest ratio `‖u‖²_{L⁴} / (‖Λ^{n/4}u‖² + ‖u‖²)` over the seeded corpus,
/// frozen from the first validated build.
const LADYZHENSKAYA_2D: f64 = 1.576_474_376_045_030_1e-2;
const LADYZHENSKAYA_3D: f64 = 1.010_762_972_669_868_7e-2;

#[test]
fn ladyzhenskaya_probe_does_not_regress() {
    for (dim, n, frozen) in [(2, 64, LADYZHENSKAYA_2D), (3, 16, LADYZHENSKAYA_3D)] {
        let g = grid(dim, n);
        let band = g.spec().dealias_cutoff() as f64;
        let worst = (0..200u64)
            .map(|seed| ladyzhenskaya_ratio(&g, &random_divfree(&g, 1.0, 9000 + seed, 1.0, band)))
            .fold(0.0, f64::max);
        assert!(worst <= 1.05 * frozen, "dim {dim}: {worst} > 1.05 x {frozen}");
    }
}
