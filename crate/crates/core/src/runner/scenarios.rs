//! Initial-data catalogue. Every generator returns a Leray-projected,
//! dealiased spectral momentum field.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fractional::leray_project_in_place;
use crate::grid::{Grid, RealField, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// `A (sin x cos y, -cos x sin y)` in 2-D, `A (sin x cos y cos z, -cos x sin y cos z, 0)` in 3-D.
    TaylorGreen,
    /// Gaussian coefficients on a wavenumber shell, rescaled to RMS velocity `amplitude`.
    RandomDivfree,
    /// Same family rescaled to `‖v₀‖_{L²} = amplitude` exactly.
    SmallData,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "taylor_green" => Ok(Scenario::TaylorGreen),
            "random_divfree" => Ok(Scenario::RandomDivfree),
            "small_data" => Ok(Scenario::SmallData),
            other => Err(Error::config(format!(
                "unknown scenario `{other}` (expected taylor_green, random_divfree or small_data)"
            ))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::TaylorGreen => "taylor_green",
            Scenario::RandomDivfree => "random_divfree",
            Scenario::SmallData => "small_data",
        })
    }
}

/// Parameters shared by the scenario generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub amplitude: f64,
    pub seed: u64,
    /// Shell `band_min <= |k|/(2π/L) <= band_max` for the random families.
    pub band_min: f64,
    pub band_max: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            seed: 0,
            band_min: 1.0,
            band_max: 4.0,
        }
    }
}

pub fn make_initial_data(
    scenario: Scenario,
    grid: &Grid,
    p: &ScenarioParams,
) -> Result<SpectralField> {
    let field = match scenario {
        Scenario::TaylorGreen => taylor_green(grid, p.amplitude),
        Scenario::RandomDivfree => random_divfree(grid, p.amplitude, p.seed, p.band_min, p.band_max),
        Scenario::SmallData => small_data(grid, p.amplitude, p.seed, p.band_min, p.band_max),
    };
    if !field.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scenario {scenario} produced a non-finite field"
        )));
    }
    Ok(field)
}

pub fn taylor_green(grid: &Grid, amplitude: f64) -> SpectralField {
    let k0 = grid.spec().fundamental();
    let dim = grid.dim();
    let phys = RealField::from_fn(grid.spec(), dim, |x, c| {
        let (sx, cx) = (k0 * x[0]).sin_cos();
        let (sy, cy) = (k0 * x[1]).sin_cos();
        let cz = if dim == 3 { (k0 * x[2]).cos() } else { 1.0 };
        amplitude
            * match c {
                0 => sx * cy * cz,
                1 => -cx * sy * cz,
                _ => 0.0,
            }
    });
    let mut v = grid.forward(&phys).expect("field sampled on the grid");
    leray_project_in_place(grid, &mut v);
    grid.dealias(&mut v);
    v
}

/// Shell-restricted random field with RMS velocity `amplitude`.
pub fn random_divfree(
    grid: &Grid,
    amplitude: f64,
    seed: u64,
    band_min: f64,
    band_max: f64,
) -> SpectralField {
    let mut v = raw_shell_field(grid, seed, band_min, band_max);
    let rms = (grid.norm_sq(&v) / grid.spec().volume()).sqrt();
    if rms > 0.0 {
        v.scale(amplitude / rms);
    }
    v
}

/// Shell-restricted random field with `‖v‖_{L²} = eps`, rescaled after projection.
pub fn small_data(grid: &Grid, eps: f64, seed: u64, band_min: f64, band_max: f64) -> SpectralField {
    let mut v = raw_shell_field(grid, seed, band_min, band_max);
    let norm = grid.norm_l2(&v);
    if norm > 0.0 {
        v.scale(eps / norm);
    }
    v
}

fn raw_shell_field(grid: &Grid, seed: u64, band_min: f64, band_max: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k0 = grid.spec().fundamental();
    let mut v = SpectralField::zeros(grid.dim(), grid.spec());
    for comp in &mut v.components {
        for c in comp.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *c = Complex64::new(re, im);
        }
    }
    // Hermitian symmetrization, then restrict to the shell and the retained band.
    let mask = grid.dealias_mask();
    let mut sym = SpectralField::zeros(grid.dim(), grid.spec());
    for (dst, src) in sym.components.iter_mut().zip(&v.components) {
        for idx in 0..grid.len() {
            let kmag = grid.k_squared()[idx].sqrt() / k0;
            if !mask[idx] || kmag < band_min || kmag > band_max {
                continue;
            }
            dst[idx] = 0.5 * (src[idx] + src[grid.partner(idx)].conj());
        }
    }
    leray_project_in_place(grid, &mut sym);
    sym
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn taylor_green_is_divergence_free_already() {
        for dim in [2, 3] {
            let g = Grid::new(GridSpec::periodic(dim, 16).unwrap());
            let k0 = g.spec().fundamental();
            let phys = RealField::from_fn(g.spec(), dim, |x, c| match c {
                0 => (k0 * x[0]).sin() * (k0 * x[1]).cos() * if dim == 3 { x[2].cos() } else { 1.0 },
                1 => -(k0 * x[0]).cos() * (k0 * x[1]).sin() * if dim == 3 { x[2].cos() } else { 1.0 },
                _ => 0.0,
            });
            let raw = g.forward(&phys).unwrap();
            let tg = taylor_green(&g, 1.0);
            let mut d = raw.clone();
            d.axpy(-1.0, &tg);
            assert!(d.max_abs() <= 1e-13 * raw.max_abs());
        }
    }

    #[test]
    fn random_field_is_deterministic_and_valid() {
        let g = Grid::new(GridSpec::periodic(2, 32).unwrap());
        let a = random_divfree(&g, 1.0, 99, 1.0, 6.0);
        let b = random_divfree(&g, 1.0, 99, 1.0, 6.0);
        assert_eq!(a, b);
        assert_ne!(a, random_divfree(&g, 1.0, 100, 1.0, 6.0));
        assert!(g.hermitian_residue(&a) < 1e-15);
        assert!(g.max_divergence(&a) <= 1e-13 * a.coefficient_norm());
        let rms = (g.norm_sq(&a) / g.spec().volume()).sqrt();
        assert!((rms - 1.0).abs() < 1e-14);
        for (idx, keep) in g.dealias_mask().iter().enumerate() {
            if !keep {
                assert_eq!(a.components[0][idx], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn small_data_norm_is_exact() {
        let g = Grid::new(GridSpec::periodic(2, 32).unwrap());
        let v = small_data(&g, 1e-3, 5, 1.0, 4.0);
        assert!((g.norm_l2(&v) - 1e-3).abs() <= 1e-15);
    }

    #[test]
    fn scenario_tags() {
        assert_eq!("taylor_green".parse::<Scenario>().unwrap(), Scenario::TaylorGreen);
        assert_eq!("small_data".parse::<Scenario>().unwrap().to_string(), "small_data");
        assert!("vortex_sheet".parse::<Scenario>().is_err());
    }
}
