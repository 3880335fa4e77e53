//! Semi-discrete right-hand side of the momentum equation,
//!
//! ```text
//! dv̂/dt = -P[u·∇v + v·∇uᵀ] - ν|k|^{2s} v̂ + P[f]
//! ```
//!
//! with quadratic terms formed pointwise on the grid and 2/3-dealiased. The
//! pressure never appears: `P` annihilates gradients.

use std::cell::OnceCell;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fractional::{self, helmholtz_filter, leray_project_in_place, PhysParams};
use crate::grid::{Grid, SpectralField};

/// Tolerance on `max_k |k·v̂(k)| / ‖v̂‖` for a valid state.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-10;

/// Time plus the spectral momentum `v̂`. The filtered velocity `û` is derived
/// on demand and cached until `v̂` changes.
#[derive(Debug, Clone)]
pub struct SimState {
    t: f64,
    v_hat: SpectralField,
    u_cache: OnceCell<(f64, SpectralField)>,
}

impl SimState {
    pub fn new(t: f64, v_hat: SpectralField) -> Self {
        Self {
            t,
            v_hat,
            u_cache: OnceCell::new(),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn v_hat(&self) -> &SpectralField {
        &self.v_hat
    }

    pub fn into_v_hat(self) -> SpectralField {
        self.v_hat
    }

    pub fn set_v_hat(&mut self, v_hat: SpectralField) {
        self.v_hat = v_hat;
        self.u_cache = OnceCell::new();
    }

    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    /// `û = v̂ / (1 + α²|k|²)`.
    pub fn u_hat(&self, grid: &Grid, alpha: f64) -> SpectralField {
        if let Some((a, u)) = self.u_cache.get() {
            if *a == alpha {
                return u.clone();
            }
            return helmholtz_filter(grid, &self.v_hat, alpha);
        }
        let u = helmholtz_filter(grid, &self.v_hat, alpha);
        let _ = self.u_cache.set((alpha, u.clone()));
        u
    }

    /// `max_k |k·v̂(k)| / ‖v̂‖` (coefficient norm).
    pub fn divergence_ratio(&self, grid: &Grid) -> f64 {
        let norm = self.v_hat.coefficient_norm();
        if norm == 0.0 {
            0.0
        } else {
            grid.max_divergence(&self.v_hat) / norm
        }
    }

    /// Checks shape, component count and the divergence-free invariant.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.v_hat.n_components() != grid.dim() {
            return Err(Error::ComponentMismatch {
                expected: grid.dim(),
                found: self.v_hat.n_components(),
            });
        }
        grid.check_spectral(&self.v_hat)?;
        let ratio = self.divergence_ratio(grid);
        if ratio > DIVERGENCE_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "state is not divergence-free: max|k·v̂|/‖v̂‖ = {ratio:e}"
            )));
        }
        Ok(())
    }
}

/// Time-dependent body force, evaluated in spectral space.
pub trait Forcing: Sync {
    fn evaluate(&self, t: f64, grid: &Grid) -> SpectralField;
}

/// Switches for the right-hand side. `nonlinear = false` is a test hook that
/// leaves only dissipation and forcing.
#[derive(Clone, Copy)]
pub struct RhsOptions<'a> {
    pub nonlinear: bool,
    pub forcing: Option<&'a dyn Forcing>,
}

impl Default for RhsOptions<'_> {
    fn default() -> Self {
        Self {
            nonlinear: true,
            forcing: None,
        }
    }
}

impl RhsOptions<'_> {
    pub fn linear_only() -> Self {
        Self {
            nonlinear: false,
            forcing: None,
        }
    }
}

fn physical(grid: &Grid, comp: &[Complex64]) -> Vec<f64> {
    grid.inverse_component(comp)
}

fn gradients(grid: &Grid, field: &SpectralField) -> Vec<Vec<Vec<f64>>> {
    // grads[i][j] = ∂_j field_i
    field
        .components
        .iter()
        .map(|comp| {
            (0..grid.dim())
                .map(|axis| physical(grid, &grid.derivative(comp, axis)))
                .collect()
        })
        .collect()
}

fn to_spectral_dealiased(grid: &Grid, comps: Vec<Vec<f64>>) -> SpectralField {
    let mut out = SpectralField {
        components: comps.iter().map(|c| grid.forward_component(c)).collect(),
    };
    grid.dealias(&mut out);
    out
}

/// `u·∇v`, component `i` = `Σ_j u_j ∂_j v_i`.
pub fn convective_term(grid: &Grid, u_hat: &SpectralField, v_hat: &SpectralField) -> SpectralField {
    let u: Vec<Vec<f64>> = u_hat.components.iter().map(|c| physical(grid, c)).collect();
    let dv = gradients(grid, v_hat);
    to_spectral_dealiased(grid, convective_products(grid, &u, &dv))
}

/// `v·∇uᵀ`, component `i` = `Σ_j v_j ∂_i u_j`.
pub fn transpose_gradient_term(
    grid: &Grid,
    v_hat: &SpectralField,
    u_hat: &SpectralField,
) -> SpectralField {
    let v: Vec<Vec<f64>> = v_hat.components.iter().map(|c| physical(grid, c)).collect();
    let du = gradients(grid, u_hat);
    to_spectral_dealiased(grid, transpose_products(grid, &v, &du))
}

fn convective_products(grid: &Grid, u: &[Vec<f64>], dv: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let dim = grid.dim();
    (0..dim)
        .map(|i| {
            (0..grid.len())
                .map(|x| (0..dim).map(|j| u[j][x] * dv[i][j][x]).sum())
                .collect()
        })
        .collect()
}

fn transpose_products(grid: &Grid, v: &[Vec<f64>], du: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let dim = grid.dim();
    (0..dim)
        .map(|i| {
            (0..grid.len())
                .map(|x| (0..dim).map(|j| v[j][x] * du[j][i][x]).sum())
                .collect()
        })
        .collect()
}

/// `u·∇v + v·∇uᵀ`, unprojected and dealiased.
pub fn nonlinear_terms(grid: &Grid, u_hat: &SpectralField, v_hat: &SpectralField) -> SpectralField {
    let u: Vec<Vec<f64>> = u_hat.components.iter().map(|c| physical(grid, c)).collect();
    let v: Vec<Vec<f64>> = v_hat.components.iter().map(|c| physical(grid, c)).collect();
    let du = gradients(grid, u_hat);
    let dv = gradients(grid, v_hat);
    let conv = convective_products(grid, &u, &dv);
    let tg = transpose_products(grid, &v, &du);
    let sum = conv
        .into_iter()
        .zip(tg)
        .map(|(a, b)| a.into_iter().zip(b).map(|(x, y)| x + y).collect())
        .collect();
    to_spectral_dealiased(grid, sum)
}

/// Everything except the diagonal dissipation: `-P[u·∇v + v·∇uᵀ] + P[f(t)]`.
pub fn explicit_part(
    grid: &Grid,
    params: &PhysParams,
    t: f64,
    v_hat: &SpectralField,
    opts: &RhsOptions<'_>,
) -> SpectralField {
    let mut out = if opts.nonlinear {
        let u_hat = helmholtz_filter(grid, v_hat, params.alpha());
        let mut n = nonlinear_terms(grid, &u_hat, v_hat);
        n.scale(-1.0);
        n
    } else {
        SpectralField::zeros(v_hat.n_components(), grid.spec())
    };
    if let Some(forcing) = opts.forcing {
        out.axpy(1.0, &forcing.evaluate(t, grid));
    }
    leray_project_in_place(grid, &mut out);
    out
}

/// Per-mode `-ν|k|^{2s}`.
pub fn linear_operator(grid: &Grid, params: &PhysParams) -> Vec<f64> {
    let two_s = 2.0 * params.s();
    grid.k_squared()
        .iter()
        .map(|&ksq| {
            if ksq == 0.0 {
                0.0
            } else {
                -params.nu() * ksq.powf(0.5 * two_s)
            }
        })
        .collect()
}

/// Full right-hand side `dv̂/dt`.
pub fn rhs(
    state: &SimState,
    params: &PhysParams,
    grid: &Grid,
    opts: &RhsOptions<'_>,
) -> SpectralField {
    let mut out = explicit_part(grid, params, state.t(), state.v_hat(), opts);
    let lin = linear_operator(grid, params);
    for (dst, src) in out.components.iter_mut().zip(&state.v_hat().components) {
        for ((d, s), l) in dst.iter_mut().zip(src).zip(&lin) {
            *d += s * *l;
        }
    }
    out
}

/// Scalar pressure with `P[N] = N + ∇p`: `p̂ = i k·N̂ / |k|²`, zero mean.
pub fn pressure_from_nonlinear(grid: &Grid, n_hat: &SpectralField) -> SpectralField {
    let mut p = SpectralField::zeros(1, grid.spec());
    for idx in 0..grid.len() {
        let k = grid.derivative_wavevector(idx);
        let ksq: f64 = k.iter().map(|x| x * x).sum();
        if ksq == 0.0 {
            continue;
        }
        let mut kdot = Complex64::new(0.0, 0.0);
        for (axis, comp) in n_hat.components.iter().enumerate() {
            kdot += comp[idx] * k[axis];
        }
        p.components[0][idx] = Complex64::new(0.0, 1.0) * kdot / ksq;
    }
    p
}

/// Pressure of the current state, recovered from its nonlinear terms.
pub fn pressure_recover(state: &SimState, params: &PhysParams, grid: &Grid) -> SpectralField {
    let u_hat = state.u_hat(grid, params.alpha());
    let n = nonlinear_terms(grid, &u_hat, state.v_hat());
    pressure_from_nonlinear(grid, &n)
}

/// `⟨u·∇v, u⟩ + ⟨v·∇uᵀ, u⟩` and its scale `‖u‖²‖∇v‖`.
pub fn trilinear_residual(grid: &Grid, u_hat: &SpectralField, v_hat: &SpectralField) -> (f64, f64) {
    let conv = convective_term(grid, u_hat, v_hat);
    let tg = transpose_gradient_term(grid, v_hat, u_hat);
    let value = grid.inner(&conv, u_hat) + grid.inner(&tg, u_hat);
    let grad_v = fractional::sobolev_seminorm(grid, v_hat, 1.0).unwrap_or(0.0);
    (value, grid.norm_sq(u_hat) * grad_v)
}

/// `⟨u × (∇×v), u⟩` by grid quadrature (3-D fields only).
pub fn cross_product_residual(grid: &Grid, u_hat: &SpectralField, v_hat: &SpectralField) -> f64 {
    assert_eq!(grid.dim(), 3, "curl identity is three-dimensional");
    let u: Vec<Vec<f64>> = u_hat.components.iter().map(|c| physical(grid, c)).collect();
    let dv = gradients(grid, v_hat);
    let w = grid.spec().spacing().powi(3);
    let mut acc = 0.0;
    for x in 0..grid.len() {
        let curl = [
            dv[2][1][x] - dv[1][2][x],
            dv[0][2][x] - dv[2][0][x],
            dv[1][0][x] - dv[0][1][x],
        ];
        let ux = [u[0][x], u[1][x], u[2][x]];
        let cross = [
            ux[1] * curl[2] - ux[2] * curl[1],
            ux[2] * curl[0] - ux[0] * curl[2],
            ux[0] * curl[1] - ux[1] * curl[0],
        ];
        acc += cross[0] * ux[0] + cross[1] * ux[1] + cross[2] * ux[2];
    }
    acc * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, RealField};
    use crate::runner::scenarios;

    fn grid2(n: usize) -> Grid {
        Grid::new(GridSpec::periodic(2, n).unwrap())
    }

    fn taylor_green(grid: &Grid) -> SpectralField {
        let f = RealField::from_fn(grid.spec(), 2, |x, c| {
            if c == 0 {
                x[0].sin() * x[1].cos()
            } else {
                -x[0].cos() * x[1].sin()
            }
        });
        grid.forward(&f).unwrap()
    }

    /// Brute-force convolution: `Σ_{p+q=k} Σ_j a_j(p) (i q_j) b_i(q)` for the
    /// convective form, or `Σ_{p+q=k} Σ_j a_j(p) (i k_i^q) b_j(q)` for the
    /// transpose form, restricted to the retained band.
    fn convolution_oracle(grid: &Grid, a: &SpectralField, b: &SpectralField, transpose: bool) -> SpectralField {
        let cut = grid.spec().dealias_cutoff();
        let k0 = grid.spec().fundamental();
        let mut out = SpectralField::zeros(2, grid.spec());
        for k1 in -cut..=cut {
            for k2 in -cut..=cut {
                let kidx = grid.index_of(&[k1, k2]).unwrap();
                for p1 in -cut..=cut {
                    for p2 in -cut..=cut {
                        let (q1, q2) = (k1 - p1, k2 - p2);
                        if q1.abs() > cut || q2.abs() > cut {
                            continue;
                        }
                        let pi = grid.index_of(&[p1, p2]).unwrap();
                        let qi = grid.index_of(&[q1, q2]).unwrap();
                        let q = [q1 as f64 * k0, q2 as f64 * k0];
                        for i in 0..2 {
                            for j in 0..2 {
                                let term = if transpose {
                                    a.components[j][pi] * Complex64::new(0.0, q[i]) * b.components[j][qi]
                                } else {
                                    a.components[j][pi] * Complex64::new(0.0, q[j]) * b.components[i][qi]
                                };
                                out.components[i][kidx] += term;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        let mut d = a.clone();
        d.axpy(-1.0, b);
        d.max_abs()
    }

    #[test]
    fn constant_advection_of_single_mode() {
        let g = grid2(16);
        let c = [0.7, -0.3];
        let mut u = SpectralField::zeros(2, g.spec());
        u.components[0][0] = Complex64::new(c[0], 0.0);
        u.components[1][0] = Complex64::new(c[1], 0.0);
        let k = [2i64, 1];
        let a = [1.0, -2.0];
        let mut v = SpectralField::zeros(2, g.spec());
        let p = g.index_of(&k).unwrap();
        let q = g.index_of(&[-k[0], -k[1]]).unwrap();
        for i in 0..2 {
            v.components[i][p] = Complex64::new(a[i], 0.0);
            v.components[i][q] = Complex64::new(a[i], 0.0);
        }
        let out = convective_term(&g, &u, &v);
        let ck = c[0] * k[0] as f64 + c[1] * k[1] as f64;
        for i in 0..2 {
            let want = Complex64::new(0.0, ck * a[i]);
            assert!((out.components[i][p] - want).norm() < 1e-13);
            assert!((out.components[i][q] - want.conj()).norm() < 1e-13);
        }
        // Constant u has no gradient.
        assert!(transpose_gradient_term(&g, &v, &u).max_abs() < 1e-15);
    }

    #[test]
    fn zero_u_gives_zero() {
        let g = grid2(16);
        let v = taylor_green(&g);
        let z = SpectralField::zeros(2, g.spec());
        assert!(convective_term(&g, &z, &v).is_zero());
    }

    #[test]
    fn taylor_green_matches_convolution_oracle() {
        let g = grid2(16);
        let v = taylor_green(&g);
        let u = helmholtz_filter(&g, &v, 0.3);
        let fast = convective_term(&g, &u, &v);
        let slow = convolution_oracle(&g, &u, &v, false);
        assert!(max_diff(&fast, &slow) < 1e-12);
        let fast = transpose_gradient_term(&g, &v, &u);
        let slow = convolution_oracle(&g, &v, &u, true);
        assert!(max_diff(&fast, &slow) < 1e-12);
    }

    #[test]
    fn random_fields_match_convolution_oracle() {
        let g = grid2(16);
        let v = scenarios::random_divfree(&g, 1.0, 17, 1.0, 5.0);
        let u = helmholtz_filter(&g, &v, 0.5);
        assert!(max_diff(&convective_term(&g, &u, &v), &convolution_oracle(&g, &u, &v, false)) < 1e-12);
        assert!(max_diff(&transpose_gradient_term(&g, &v, &u), &convolution_oracle(&g, &v, &u, true)) < 1e-12);
    }

    #[test]
    fn self_transpose_term_is_gradient() {
        let g = grid2(16);
        let v = taylor_green(&g);
        let t = transpose_gradient_term(&g, &v, &v);
        // ∇(|v|²/2) computed independently.
        let phys = g.inverse(&v).unwrap();
        let half_sq = RealField {
            components: vec![(0..g.len())
                .map(|x| 0.5 * (phys.components[0][x].powi(2) + phys.components[1][x].powi(2)))
                .collect()],
        };
        let e = g.forward(&half_sq).unwrap();
        let grad = SpectralField {
            components: (0..2).map(|a| g.derivative(&e.components[0], a)).collect(),
        };
        assert!(max_diff(&t, &grad) < 1e-13);
        let mut projected = t.clone();
        leray_project_in_place(&g, &mut projected);
        assert!(projected.max_abs() < 1e-13);
    }

    #[test]
    fn rhs_of_zero_is_zero() {
        let g = grid2(16);
        let p = PhysParams::new(0.5, 1.0, 0.2, 2).unwrap();
        let st = SimState::new(0.0, SpectralField::zeros(2, g.spec()));
        assert!(rhs(&st, &p, &g, &RhsOptions::default()).is_zero());
    }

    #[test]
    fn linear_rhs_single_mode() {
        let g = grid2(16);
        let p = PhysParams::new(0.5, 1.0, 0.2, 2).unwrap();
        let mut v = SpectralField::zeros(2, g.spec());
        for (m, c) in [([1i64, 0], 0.5), ([-1, 0], 0.5)] {
            v.components[1][g.index_of(&m).unwrap()] = Complex64::new(c, 0.0);
        }
        let st = SimState::new(0.0, v.clone());
        let r = rhs(&st, &p, &g, &RhsOptions::linear_only());
        assert!(max_diff(&r, &v.scaled(-1.0)) < 1e-16);
    }

    #[test]
    fn nonlinear_part_is_energy_neutral() {
        let g = grid2(32);
        let p = PhysParams::new(0.75, 0.1, 0.4, 2).unwrap();
        for seed in 0..5 {
            let v = scenarios::random_divfree(&g, 1.0, seed, 1.0, 8.0);
            let u = helmholtz_filter(&g, &v, p.alpha());
            let n = explicit_part(&g, &p, 0.0, &v, &RhsOptions::default());
            let power = g.inner(&n, &u);
            let scale = g.norm_sq(&u) * fractional::sobolev_seminorm(&g, &v, 1.0).unwrap();
            assert!(power.abs() <= 1e-11 * scale, "seed {seed}: {power:e}");
        }
    }

    #[test]
    fn rhs_output_is_divergence_free() {
        let g = grid2(32);
        let p = PhysParams::new(0.6, 0.1, 0.3, 2).unwrap();
        let v = scenarios::random_divfree(&g, 2.0, 3, 1.0, 8.0);
        let r = rhs(&SimState::new(0.0, v), &p, &g, &RhsOptions::default());
        assert!(g.max_divergence(&r) <= 1e-12 * r.coefficient_norm());
    }

    #[test]
    fn inviscid_energy_is_conserved_instantaneously() {
        // With ν = 0, dE/dt = 2⟨v̂_t, û⟩ must vanish.
        let g = grid2(32);
        let p = PhysParams::new_unchecked(0.5, 0.0, 0.3);
        let v = scenarios::random_divfree(&g, 1.0, 8, 1.0, 8.0);
        let st = SimState::new(0.0, v);
        let u = st.u_hat(&g, p.alpha());
        let r = rhs(&st, &p, &g, &RhsOptions::default());
        let de_dt = 2.0 * g.inner(&r, &u);
        let e = crate::diagnostics::energy(&g, &u, p.alpha());
        assert!(de_dt.abs() <= 1e-10 * e, "{de_dt:e}");
    }

    #[test]
    fn pressure_examples() {
        let g = grid2(16);
        // Divergence-free N: zero pressure.
        let n = taylor_green(&g);
        assert!(pressure_from_nonlinear(&g, &n).max_abs() < 1e-16);
        // N = ∇φ: p = -φ up to the mean.
        let phi = RealField::from_fn(g.spec(), 1, |x, _| (x[0] + 2.0 * x[1]).sin() + 0.3 * (3.0 * x[0]).cos());
        let phi_hat = g.forward(&phi).unwrap();
        let grad = SpectralField {
            components: (0..2).map(|a| g.derivative(&phi_hat.components[0], a)).collect(),
        };
        let p = pressure_from_nonlinear(&g, &grad);
        for idx in 1..g.len() {
            assert!((p.components[0][idx] + phi_hat.components[0][idx]).norm() < 1e-15);
        }
    }

    #[test]
    fn pressure_closes_projection() {
        let g = grid2(16);
        let params = PhysParams::new(0.5, 0.1, 0.2, 2).unwrap();
        let mut v = taylor_green(&g);
        v.axpy(0.5, &scenarios::random_divfree(&g, 1.0, 2, 1.0, 5.0));
        let st = SimState::new(0.0, v);
        let u = st.u_hat(&g, params.alpha());
        let n = nonlinear_terms(&g, &u, st.v_hat());
        let p = pressure_recover(&st, &params, &g);
        let mut n_plus_grad = n.clone();
        for axis in 0..2 {
            let dp = g.derivative(&p.components[0], axis);
            for (d, s) in n_plus_grad.components[axis].iter_mut().zip(dp) {
                *d += s;
            }
        }
        let mut projected = n.clone();
        leray_project_in_place(&g, &mut projected);
        assert!(max_diff(&projected, &n_plus_grad) <= 1e-11 * n.coefficient_norm());
    }

    #[test]
    fn curl_form_vanishes_in_3d() {
        let g = Grid::new(GridSpec::periodic(3, 16).unwrap());
        let v = scenarios::random_divfree(&g, 1.0, 4, 1.0, 4.0);
        let u = helmholtz_filter(&g, &v, 0.3);
        let r = cross_product_residual(&g, &u, &v);
        let scale = g.norm_sq(&u) * fractional::sobolev_seminorm(&g, &v, 1.0).unwrap();
        assert!(r.abs() <= 1e-12 * scale, "{r:e}");
    }

    #[test]
    fn cached_u_tracks_v() {
        let g = grid2(16);
        let mut st = SimState::new(0.0, taylor_green(&g));
        let u1 = st.u_hat(&g, 0.5);
        assert_eq!(u1, helmholtz_filter(&g, st.v_hat(), 0.5));
        st.set_v_hat(st.v_hat().scaled(2.0));
        let u2 = st.u_hat(&g, 0.5);
        assert_eq!(u2, u1.scaled(2.0));
        assert_eq!(st.u_hat(&g, 0.1), helmholtz_filter(&g, st.v_hat(), 0.1));
    }
}
