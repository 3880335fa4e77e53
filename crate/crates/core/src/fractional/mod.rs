//! Fourier-multiplier operators: `Λ^γ = (-Δ)^{γ/2}`, the Helmholtz filter,
//! the Leray projector, fractional Sobolev norms and the normalization
//! constant of the hypersingular kernel.

mod gagliardo;

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField, SpectralField};

pub use gagliardo::{gagliardo_seminorm_oracle, lattice_inverse_power_sum, PatchExtension};

/// Fractional order `s`, viscosity `ν` and filter width `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    s: f64,
    nu: f64,
    alpha: f64,
    critical: bool,
}

impl PhysParams {
    /// Validates `dim/4 <= s < 1`, `ν > 0` and `α >= 0`.
    pub fn new(s: f64, nu: f64, alpha: f64, dim: usize) -> Result<Self> {
        let lower = dim as f64 / 4.0;
        if !(s.is_finite() && s >= lower && s < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "s must satisfy dim/4 = {lower} <= s < 1, got {s}"
            )));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidParameter(format!("nu must be > 0, got {nu}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be >= 0, got {alpha}"
            )));
        }
        Ok(Self {
            s,
            nu,
            alpha,
            critical: s == lower,
        })
    }

    /// Skips range validation. Used by the conservation tests (`ν = 0`, `s = 1`).
    pub fn new_unchecked(s: f64, nu: f64, alpha: f64) -> Self {
        Self {
            s,
            nu,
            alpha,
            critical: false,
        }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `s = dim/4`, where small initial data is required.
    pub fn is_critical(&self) -> bool {
        self.critical
    }
}

/// Per-mode `|k|^γ`. The zero mode gets 0 for `γ > 0` and 1 for `γ = 0`.
pub fn lambda_multiplier(grid: &Grid, gamma: f64) -> Result<Vec<f64>> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda power requires finite gamma >= 0, got {gamma}"
        )));
    }
    Ok(grid
        .k_squared()
        .iter()
        .map(|&ksq| {
            if gamma == 0.0 {
                1.0
            } else {
                ksq.powf(0.5 * gamma)
            }
        })
        .collect())
}

/// `Λ^γ F`: scale the coefficient at `k` by `|k|^γ`.
pub fn lambda_power(grid: &Grid, field: &SpectralField, gamma: f64) -> Result<SpectralField> {
    let weights = lambda_multiplier(grid, gamma)?;
    let mut out = field.clone();
    out.apply_diagonal(&weights);
    Ok(out)
}

/// `(-Δ)^s F = Λ^{2s} F`.
pub fn fractional_laplacian(
    grid: &Grid,
    field: &SpectralField,
    params: &PhysParams,
) -> Result<SpectralField> {
    lambda_power(grid, field, 2.0 * params.s())
}

/// Per-mode `1 / (1 + α²|k|²)`.
pub fn helmholtz_factor(grid: &Grid, alpha: f64) -> Vec<f64> {
    let a2 = alpha * alpha;
    grid.k_squared().iter().map(|&ksq| 1.0 / (1.0 + a2 * ksq)).collect()
}

/// Solve `u - α²Δu = v` spectrally.
pub fn helmholtz_filter(grid: &Grid, v_hat: &SpectralField, alpha: f64) -> SpectralField {
    let mut out = v_hat.clone();
    if alpha != 0.0 {
        out.apply_diagonal(&helmholtz_factor(grid, alpha));
    }
    out
}

/// Apply `P(k) = I - k kᵀ/|k|²` mode by mode; the zero mode is untouched.
pub fn leray_project_in_place(grid: &Grid, field: &mut SpectralField) {
    let dim = grid.dim();
    debug_assert_eq!(field.n_components(), dim);
    for idx in 0..grid.len() {
        let k = grid.derivative_wavevector(idx);
        let ksq: f64 = k.iter().map(|x| x * x).sum();
        if ksq == 0.0 {
            continue;
        }
        let mut kdot = Complex64::new(0.0, 0.0);
        for (axis, comp) in field.components.iter().enumerate() {
            kdot += comp[idx] * k[axis];
        }
        let factor = kdot / ksq;
        for (axis, comp) in field.components.iter_mut().enumerate() {
            comp[idx] -= factor * k[axis];
        }
    }
}

pub fn leray_project(grid: &Grid, field: &SpectralField) -> SpectralField {
    let mut out = field.clone();
    leray_project_in_place(grid, &mut out);
    out
}

/// Closed form `2^{2s} Γ((n+2s)/2) / (π^{n/2} Γ(1-s))`.
///
/// This is the expression usually quoted for the hypersingular-kernel
/// constant. It exceeds the reciprocal of `∫ (1 - cos ζ₁)/|ζ|^{n+2s} dζ` by
/// exactly `1/s`; see [`kernel_constant`] for the value that makes the
/// Gagliardo/Fourier identity hold.
pub fn normalization_constant(n: usize, s: f64) -> Result<f64> {
    if n != 2 && n != 3 {
        return Err(Error::InvalidParameter(format!(
            "normalization constant defined for n = 2, 3, got {n}"
        )));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "normalization constant requires 0 < s < 1, got {s}"
        )));
    }
    let n = n as f64;
    Ok(2f64.powf(2.0 * s) * gamma((n + 2.0 * s) / 2.0)
        / (PI.powf(n / 2.0) * gamma(1.0 - s)))
}

/// `(∫_{ℝⁿ} (1 - cos ζ₁)/|ζ|^{n+2s} dζ)^{-1} = s · normalization_constant(n, s)`.
///
/// With this constant `[u]²_{H^s} = 2 C⁻¹ ‖Λ^s u‖²_{L²}` holds exactly.
pub fn kernel_constant(n: usize, s: f64) -> Result<f64> {
    Ok(s * normalization_constant(n, s)?)
}

/// `‖Λ^γ F‖_{L²}`, the homogeneous `Ḣ^γ` seminorm.
pub fn sobolev_seminorm(grid: &Grid, field: &SpectralField, gamma: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "seminorm requires finite gamma >= 0, got {gamma}"
        )));
    }
    let sq = if gamma == 0.0 {
        grid.norm_sq(field)
    } else {
        grid.weighted_norm_sq(field, |ksq| ksq.powf(gamma))
    };
    Ok(sq.sqrt())
}

/// Inhomogeneous norm `(2 C_{n,s}⁻¹ ‖Λ^s F‖² + ‖F‖²)^{1/2}`, with `C_{n,s}`
/// from [`normalization_constant`].
pub fn sobolev_norm_hs(grid: &Grid, field: &SpectralField, s: f64, n: usize) -> Result<f64> {
    let c = normalization_constant(n, s)?;
    let semi = sobolev_seminorm(grid, field, s)?;
    let l2 = grid.norm_sq(field);
    Ok((2.0 / c * semi * semi + l2).sqrt())
}

/// `(∫ |f|^p dx)^{1/p}` by grid quadrature, `|f|` the Euclidean norm over components.
pub fn lp_norm(grid: &Grid, field: &RealField, p: f64) -> f64 {
    let weight = grid.spec().spacing().powi(grid.dim() as i32);
    let len = grid.len();
    let mut acc = 0.0;
    for idx in 0..len {
        let mag_sq: f64 = field.components.iter().map(|c| c[idx] * c[idx]).sum();
        acc += mag_sq.powf(0.5 * p);
    }
    (acc * weight).powf(1.0 / p)
}

/// `‖u‖²_{L⁴} / (‖Λ^{n/4} u‖²_{L²} + ‖u‖²_{L²})` for a spectral field `u`.
pub fn ladyzhenskaya_ratio(grid: &Grid, u_hat: &SpectralField) -> f64 {
    let n = grid.dim() as f64;
    let denom = grid.weighted_norm_sq(u_hat, |ksq| ksq.powf(n / 4.0) + 1.0);
    if denom == 0.0 {
        return 0.0;
    }
    let u = grid.inverse_unchecked(u_hat);
    let l4 = lp_norm(grid, &u, 4.0);
    l4 * l4 / denom
}
