//! Brute-force Gagliardo seminorm
//! `[f]² = ∫∫ |f(x) - f(y)|² / |x - y|^{n+2s} dx dy`
//! on a small uniform patch. This is an `O(N^{2·dim})` cross-check for the
//! multiplier-side seminorm, not a production path.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField};

/// Largest sample count the oracle accepts (48² in 2D).
pub const MAX_ORACLE_POINTS: usize = 48 * 48;

/// Boundary-to-peak ratio above which a zero-extended field is rejected.
pub const SUPPORT_TOLERANCE: f64 = 1e-10;

/// How samples outside the patch are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchExtension {
    /// Only pairs inside the patch: the seminorm of `f` restricted to the patch.
    Restricted,
    /// `f` extended by zero to all of `ℝⁿ`; the whole-space seminorm. Requires
    /// `f` to vanish (to [`SUPPORT_TOLERANCE`]) on the patch boundary.
    ZeroExtended,
}

/// Midpoint-rule double sum over grid-point pairs.
///
/// The diagonal cell is replaced by its leading-order local value
/// `|∇f(x)|²/n · ∫_cell |h|^{2-n-2s} dh`, with `∇f` from central differences.
/// Under [`PatchExtension::ZeroExtended`] the pairs with one point outside the
/// patch are summed in closed form through the lattice constant
/// `Σ_{m≠0} |m|^{-(n+2s)}`.
pub fn gagliardo_seminorm_oracle(
    spec: &GridSpec,
    f: &RealField,
    s: f64,
    extension: PatchExtension,
) -> Result<f64> {
    let dim = spec.dim();
    let n = spec.n_points();
    let len = spec.len();
    if f.n_components() != 1 {
        return Err(Error::ComponentMismatch {
            expected: 1,
            found: f.n_components(),
        });
    }
    if f.components[0].len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            found: f.components[0].len(),
        });
    }
    if len > MAX_ORACLE_POINTS {
        return Err(Error::InvalidParameter(format!(
            "Gagliardo oracle is limited to {MAX_ORACLE_POINTS} samples, got {len}"
        )));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Gagliardo seminorm requires 0 < s < 1, got {s}"
        )));
    }
    let values = &f.components[0];
    if extension == PatchExtension::ZeroExtended {
        check_support(dim, n, values)?;
    }

    let p = dim as f64 + 2.0 * s;
    let h = spec.spacing();

    // Off-diagonal pairs, grouped by integer offset m.
    let span = 2 * n - 1;
    let offsets = span.pow(dim as u32);
    let mut pair_sum = 0.0;
    let mut coverage = vec![0.0; len];
    let mut m = vec![0i64; dim];
    let mut lo = vec![0usize; dim];
    let mut hi = vec![0usize; dim];
    let mut x = vec![0usize; dim];
    for o in 0..offsets {
        let mut rem = o;
        for axis in (0..dim).rev() {
            m[axis] = (rem % span) as i64 - (n as i64 - 1);
            rem /= span;
        }
        let r2: i64 = m.iter().map(|v| v * v).sum();
        if r2 == 0 {
            continue;
        }
        let w = (r2 as f64).powf(-0.5 * p);
        for axis in 0..dim {
            lo[axis] = (-m[axis]).max(0) as usize;
            hi[axis] = (n as i64 - m[axis].max(0)) as usize;
        }
        let shift = flat(dim, n, &m);
        let mut acc = 0.0;
        x.copy_from_slice(&lo);
        'odometer: loop {
            let xi = flat_unsigned(dim, n, &x);
            let yi = (xi as i64 + shift) as usize;
            let d = values[xi] - values[yi];
            acc += d * d;
            coverage[xi] += w;
            for axis in (0..dim).rev() {
                x[axis] += 1;
                if x[axis] < hi[axis] {
                    continue 'odometer;
                }
                x[axis] = lo[axis];
            }
            break;
        }
        pair_sum += w * acc;
    }
    let mut total = pair_sum * h.powf(2.0 * dim as f64 - p);

    if extension == PatchExtension::ZeroExtended {
        let lattice = lattice_inverse_power_sum(dim, p);
        let tail: f64 = values
            .iter()
            .zip(&coverage)
            .map(|(v, c)| v * v * (lattice - c))
            .sum();
        total += 2.0 * tail * h.powf(2.0 * dim as f64 - p);
    }

    let grad_sq = gradient_sq(dim, n, h, values, extension);
    let cell = unit_cell_integral(dim, p);
    let diag: f64 = grad_sq.iter().sum::<f64>() / dim as f64;
    total += diag * h.powf(dim as f64) * h.powf(dim as f64 + 2.0 - p) * cell;

    Ok(total.sqrt())
}

fn flat(dim: usize, n: usize, m: &[i64]) -> i64 {
    let mut idx = 0i64;
    for &v in m.iter().take(dim) {
        idx = idx * n as i64 + v;
    }
    idx
}

fn flat_unsigned(dim: usize, n: usize, x: &[usize]) -> usize {
    let mut idx = 0usize;
    for &v in x.iter().take(dim) {
        idx = idx * n + v;
    }
    idx
}

fn check_support(dim: usize, n: usize, values: &[f64]) -> Result<()> {
    let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(());
    }
    let mut boundary = 0.0_f64;
    for (idx, v) in values.iter().enumerate() {
        let mut rem = idx;
        let mut on_edge = false;
        for _ in 0..dim {
            let i = rem % n;
            rem /= n;
            on_edge |= i == 0 || i == n - 1;
        }
        if on_edge {
            boundary = boundary.max(v.abs());
        }
    }
    let ratio = boundary / peak;
    if ratio > SUPPORT_TOLERANCE {
        return Err(Error::SupportViolation { ratio });
    }
    Ok(())
}

/// `|∇f|²` per point from second-order differences. Zero-extended fields use
/// zero outside the patch; restricted fields use one-sided stencils at edges.
fn gradient_sq(dim: usize, n: usize, h: f64, values: &[f64], ext: PatchExtension) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    let mut stride = 1;
    for _axis in (0..dim).rev() {
        for (idx, o) in out.iter_mut().enumerate() {
            let i = (idx / stride) % n;
            let at = |j: i64| -> f64 {
                if j < 0 || j >= n as i64 {
                    0.0
                } else {
                    values[(idx as i64 + (j - i as i64) * stride as i64) as usize]
                }
            };
            let i = i as i64;
            let d = match ext {
                PatchExtension::ZeroExtended => (at(i + 1) - at(i - 1)) / (2.0 * h),
                PatchExtension::Restricted => {
                    if i == 0 {
                        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
                    } else if i == n as i64 - 1 {
                        (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) / (2.0 * h)
                    } else {
                        (at(i + 1) - at(i - 1)) / (2.0 * h)
                    }
                }
            };
            *o += d * d;
        }
        stride *= n;
    }
    out
}

/// `∫_{[-1/2,1/2]^d} |q|^{2-p} dq`, reduced to one face of the cube:
/// `d/(d+2-p) · ∫_face |w|^{2-p} dw` with `w = (·, 1/2)`.
fn unit_cell_integral(dim: usize, p: f64) -> f64 {
    let m = 400;
    let h = 1.0 / m as f64;
    let e = 0.5 * (2.0 - p);
    let face = match dim {
        2 => (0..m)
            .map(|i| {
                let x = -0.5 + (i as f64 + 0.5) * h;
                (x * x + 0.25).powf(e)
            })
            .sum::<f64>()
            * h,
        3 => {
            let mut acc = 0.0;
            for i in 0..m {
                let x = -0.5 + (i as f64 + 0.5) * h;
                for j in 0..m {
                    let y = -0.5 + (j as f64 + 0.5) * h;
                    acc += (x * x + y * y + 0.25).powf(e);
                }
            }
            acc * h * h
        }
        _ => unreachable!("dimension validated by GridSpec"),
    };
    dim as f64 * face / (dim as f64 + 2.0 - p)
}

/// `Σ_{m ∈ ℤ^d, m ≠ 0} |m|^{-p}` for `p > d`: direct sum over the ball of
/// radius `R` plus the continuum tail `ω_d R^{d-p}/(p-d)`.
pub fn lattice_inverse_power_sum(dim: usize, p: f64) -> f64 {
    assert!(p > dim as f64, "lattice sum diverges for p <= dim");
    let radius: i64 = match dim {
        2 => 600,
        _ => 90,
    };
    let r2max = radius * radius;
    let mut acc = 0.0;
    match dim {
        2 => {
            for a in -radius..=radius {
                for b in -radius..=radius {
                    let r2 = a * a + b * b;
                    if r2 != 0 && r2 <= r2max {
                        acc += (r2 as f64).powf(-0.5 * p);
                    }
                }
            }
        }
        _ => {
            for a in -radius..=radius {
                for b in -radius..=radius {
                    for c in -radius..=radius {
                        let r2 = a * a + b * b + c * c;
                        if r2 != 0 && r2 <= r2max {
                            acc += (r2 as f64).powf(-0.5 * p);
                        }
                    }
                }
            }
        }
    }
    let surface = if dim == 2 { 2.0 * PI } else { 4.0 * PI };
    // Shift the continuum boundary by half a lattice spacing.
    let r = radius as f64 + 0.5;
    acc + surface * r.powf(dim as f64 - p) / (p - dim as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch(n: usize) -> GridSpec {
        GridSpec::new(2, n, 16.0).unwrap()
    }

    fn gaussian(spec: &GridSpec) -> RealField {
        let half = spec.box_length() / 2.0;
        RealField::from_fn(spec, 1, |x, _| {
            let r2: f64 = x.iter().map(|v| (v - half).powi(2)).sum();
            (-r2).exp()
        })
    }

    #[test]
    fn constant_has_zero_seminorm() {
        let spec = patch(16);
        let f = RealField::from_fn(&spec, 1, |_, _| 3.0);
        let v = gagliardo_seminorm_oracle(&spec, &f, 0.5, PatchExtension::Restricted).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn homogeneous_of_degree_one() {
        let spec = patch(24);
        let f = gaussian(&spec);
        let mut g = f.clone();
        for v in &mut g.components[0] {
            *v *= 2.0;
        }
        for ext in [PatchExtension::Restricted, PatchExtension::ZeroExtended] {
            let a = gagliardo_seminorm_oracle(&spec, &f, 0.5, ext).unwrap();
            let b = gagliardo_seminorm_oracle(&spec, &g, 0.5, ext).unwrap();
            assert!((b - 2.0 * a).abs() <= 1e-14 * b);
        }
    }

    #[test]
    fn support_violation_is_reported() {
        let spec = patch(16);
        let f = RealField::from_fn(&spec, 1, |_, _| 1.0);
        assert!(matches!(
            gagliardo_seminorm_oracle(&spec, &f, 0.5, PatchExtension::ZeroExtended),
            Err(Error::SupportViolation { .. })
        ));
    }

    #[test]
    fn oversized_grid_is_rejected() {
        let spec = patch(50);
        let f = RealField::zeros(1, &spec);
        assert!(gagliardo_seminorm_oracle(&spec, &f, 0.5, PatchExtension::Restricted).is_err());
    }

    #[test]
    fn lattice_sum_reference() {
        // Σ_{ℤ²∖0} |m|^{-3} = 4 ζ(3/2) β(3/2)
        let reference = 4.0 * 2.612_375_348_685_488 * 0.864_502_475_854_871_2;
        let z = lattice_inverse_power_sum(2, 3.0);
        assert!((z - reference).abs() < 1e-5 * reference, "{z} vs {reference}");
    }

    #[test]
    fn unit_cell_integral_square() {
        // p = 2 gives the area of the unit cell.
        assert!((unit_cell_integral(2, 2.0) - 1.0).abs() < 1e-12);
        assert!((unit_cell_integral(3, 2.0) - 1.0).abs() < 1e-12);
    }
}
