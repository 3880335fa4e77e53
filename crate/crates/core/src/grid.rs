//! Periodic box discretization and the real/spectral transforms.
//!
//! Fields are stored row-major with the last axis fastest. Mode index `i`
//! along an axis maps to the integer wavenumber `i` for `i <= N/2` and to
//! `i - N` otherwise, so the lattice is `{-N/2+1, ..., N/2}` per axis and the
//! physical wavenumber is that integer times `2π/L`.
//!
//! Normalization: `F(k) = N^{-dim} Σ_x f(x) e^{-i k·x}`. A unit-amplitude
//! `cos(k·x)` therefore maps to two coefficients of modulus 1/2, and Parseval
//! reads `Σ_x |f(x)|² (L/N)^dim = L^dim Σ_k |F(k)|²`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative Hermitian residue above which an inverse transform is refused.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n_points: usize,
    box_length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n_points: usize, box_length: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n_points < 8 || n_points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_points must be even and >= 8, got {n_points}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box_length must be positive and finite, got {box_length}"
            )));
        }
        Ok(Self {
            dim,
            n_points,
            box_length,
        })
    }

    /// Box of side 2π, so integer wavenumbers are physical wavenumbers.
    pub fn periodic(dim: usize, n_points: usize) -> Result<Self> {
        Self::new(dim, n_points, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Total number of grid points (and of Fourier modes), `N^dim`.
    pub fn len(&self) -> usize {
        self.n_points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n_points as f64
    }

    /// Fundamental wavenumber `2π/L`.
    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// `L^dim`, the quadrature weight relating coefficient sums to integrals.
    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    /// Largest retained integer wavenumber under the 2/3 rule, `floor(N/3)`.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n_points / 3) as i64
    }

    /// Integer wavenumber of mode index `i` along one axis.
    pub fn integer_wavenumber(&self, i: usize) -> i64 {
        let n = self.n_points;
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}D, N = {}, L = {}",
            self.dim, self.n_points, self.box_length
        )
    }
}

/// Real samples on the uniform grid, one array per component.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub components: Vec<Vec<f64>>,
}

impl RealField {
    pub fn zeros(n_components: usize, spec: &GridSpec) -> Self {
        Self {
            components: vec![vec![0.0; spec.len()]; n_components],
        }
    }

    /// Sample `f(x, component)` at every grid point `x_j = i_j L/N`.
    pub fn from_fn(
        spec: &GridSpec,
        n_components: usize,
        mut f: impl FnMut(&[f64], usize) -> f64,
    ) -> Self {
        let mut field = Self::zeros(n_components, spec);
        let mut x = vec![0.0; spec.dim()];
        for idx in 0..spec.len() {
            point_coordinates(spec, idx, &mut x);
            for (c, comp) in field.components.iter_mut().enumerate() {
                comp[idx] = f(&x, c);
            }
        }
        field
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().flatten().all(|v| v.is_finite())
    }
}

/// Complex Fourier coefficients, one array per component, indexed like the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub components: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn zeros(n_components: usize, spec: &GridSpec) -> Self {
        Self {
            components: vec![vec![Complex64::new(0.0, 0.0); spec.len()]; n_components],
        }
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn scale(&mut self, factor: f64) {
        for c in self.components.iter_mut().flatten() {
            *c *= factor;
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        for (dst, src) in self.components.iter_mut().zip(&other.components) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * a;
            }
        }
    }

    /// Multiply every component at mode `idx` by `weights[idx]`.
    pub fn apply_diagonal(&mut self, weights: &[f64]) {
        for comp in &mut self.components {
            for (c, w) in comp.iter_mut().zip(weights) {
                *c *= *w;
            }
        }
    }

    /// Euclidean norm of the raw coefficient vector (no `L^dim` weight).
    pub fn coefficient_norm(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0_f64, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.components
            .iter()
            .flatten()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.components
            .iter()
            .flatten()
            .all(|c| c.re == 0.0 && c.im == 0.0)
    }
}

fn point_coordinates(spec: &GridSpec, mut idx: usize, x: &mut [f64]) {
    let n = spec.n_points();
    let h = spec.spacing();
    for axis in (0..spec.dim()).rev() {
        x[axis] = (idx % n) as f64 * h;
        idx /= n;
    }
}

/// A [`GridSpec`] with its FFT plans and wavenumber tables.
///
/// Two wavevector tables are kept. `wavevector` is the full lattice vector and
/// feeds every even multiplier (`|k|^γ`, the Helmholtz filter, norms).
/// `derivative_wavevector` zeroes the Nyquist component on each axis so that
/// odd operators (gradients, divergence, the Leray projector) preserve
/// Hermitian symmetry.
#[derive(Clone)]
pub struct Grid {
    spec: GridSpec,
    k: Vec<f64>,
    kd: Vec<f64>,
    k_sq: Vec<f64>,
    partner: Vec<usize>,
    mask: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Self {
        let dim = spec.dim();
        let n = spec.n_points();
        let len = spec.len();
        let k0 = spec.fundamental();
        let cutoff = spec.dealias_cutoff();
        let nyquist = (n / 2) as i64;

        let mut k = vec![0.0; len * dim];
        let mut kd = vec![0.0; len * dim];
        let mut k_sq = vec![0.0; len];
        let mut partner = vec![0; len];
        let mut mask = vec![true; len];

        for idx in 0..len {
            let mut rem = idx;
            let mut stride = 1;
            let mut p = 0;
            for axis in (0..dim).rev() {
                let i = rem % n;
                rem /= n;
                let m = spec.integer_wavenumber(i);
                k[idx * dim + axis] = m as f64 * k0;
                kd[idx * dim + axis] = if m == nyquist { 0.0 } else { m as f64 * k0 };
                k_sq[idx] += (m as f64 * k0).powi(2);
                if m.abs() > cutoff {
                    mask[idx] = false;
                }
                p += ((n - i) % n) * stride;
                stride *= n;
            }
            partner[idx] = p;
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let backward = planner.plan_fft_inverse(n);

        Self {
            spec,
            k,
            kd,
            k_sq,
            partner,
            mask,
            forward,
            backward,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn wavevector(&self, idx: usize) -> &[f64] {
        let d = self.dim();
        &self.k[idx * d..(idx + 1) * d]
    }

    pub fn derivative_wavevector(&self, idx: usize) -> &[f64] {
        let d = self.dim();
        &self.kd[idx * d..(idx + 1) * d]
    }

    /// `|k|²` for every mode.
    pub fn k_squared(&self) -> &[f64] {
        &self.k_sq
    }

    /// Index of the mode carrying `-k`.
    pub fn partner(&self, idx: usize) -> usize {
        self.partner[idx]
    }

    /// Mode index of an integer wavevector, if it lies on the lattice.
    pub fn index_of(&self, m: &[i64]) -> Option<usize> {
        let n = self.spec.n_points() as i64;
        if m.len() != self.dim() {
            return None;
        }
        let mut idx = 0usize;
        for &mi in m {
            if mi <= -n / 2 || mi > n / 2 {
                return None;
            }
            idx = idx * n as usize + mi.rem_euclid(n) as usize;
        }
        Some(idx)
    }

    /// 2/3-rule mask: true iff `|k_j| <= floor(N/3)·(2π/L)` on every axis.
    pub fn dealias_mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn dealias(&self, field: &mut SpectralField) {
        for comp in &mut field.components {
            for (c, &keep) in comp.iter_mut().zip(&self.mask) {
                if !keep {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    pub fn forward(&self, field: &RealField) -> Result<SpectralField> {
        self.check_real(field)?;
        let scale = 1.0 / self.len() as f64;
        let components = field
            .components
            .iter()
            .map(|comp| {
                let mut buf: Vec<Complex64> =
                    comp.iter().map(|&v| Complex64::new(v * scale, 0.0)).collect();
                self.fft_nd(&mut buf, false);
                buf
            })
            .collect();
        Ok(SpectralField { components })
    }

    /// Inverse transform, refusing input whose Hermitian residue exceeds
    /// [`HERMITIAN_TOLERANCE`].
    pub fn inverse(&self, field: &SpectralField) -> Result<RealField> {
        self.check_spectral(field)?;
        let residue = self.hermitian_residue(field);
        if residue > HERMITIAN_TOLERANCE {
            return Err(Error::HermitianViolation {
                residue,
                tolerance: HERMITIAN_TOLERANCE,
            });
        }
        Ok(self.inverse_unchecked(field))
    }

    /// Inverse transform of a field known to be Hermitian by construction.
    pub(crate) fn inverse_unchecked(&self, field: &SpectralField) -> RealField {
        RealField {
            components: field
                .components
                .iter()
                .map(|comp| self.inverse_component(comp))
                .collect(),
        }
    }

    pub(crate) fn inverse_component(&self, comp: &[Complex64]) -> Vec<f64> {
        let mut buf = comp.to_vec();
        self.fft_nd(&mut buf, true);
        buf.into_iter().map(|c| c.re).collect()
    }

    pub(crate) fn forward_component(&self, comp: &[f64]) -> Vec<Complex64> {
        let scale = 1.0 / self.len() as f64;
        let mut buf: Vec<Complex64> = comp.iter().map(|&v| Complex64::new(v * scale, 0.0)).collect();
        self.fft_nd(&mut buf, false);
        buf
    }

    /// `max_k |F(k) - conj(F(-k))| / max_k |F(k)|` over all components.
    pub fn hermitian_residue(&self, field: &SpectralField) -> f64 {
        let peak = field.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for comp in &field.components {
            for (idx, c) in comp.iter().enumerate() {
                let diff = c - comp[self.partner[idx]].conj();
                worst = worst.max(diff.norm());
            }
        }
        worst / peak
    }

    /// Spectral quadrature of `∫ a·b dx`.
    pub fn inner(&self, a: &SpectralField, b: &SpectralField) -> f64 {
        let mut acc = 0.0;
        for (ca, cb) in a.components.iter().zip(&b.components) {
            for (x, y) in ca.iter().zip(cb) {
                acc += x.re * y.re + x.im * y.im;
            }
        }
        acc * self.spec.volume()
    }

    /// `∫ |f|² dx` by Parseval.
    pub fn norm_sq(&self, field: &SpectralField) -> f64 {
        self.weighted_norm_sq(field, |_| 1.0)
    }

    pub fn norm_l2(&self, field: &SpectralField) -> f64 {
        self.norm_sq(field).sqrt()
    }

    /// `L^dim Σ_k w(|k|²) |F(k)|²`, the building block of every Sobolev-type norm.
    pub fn weighted_norm_sq(&self, field: &SpectralField, weight: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (idx, &ksq) in self.k_sq.iter().enumerate() {
            let mut m = 0.0;
            for comp in &field.components {
                m += comp[idx].norm_sqr();
            }
            if m != 0.0 {
                acc += weight(ksq) * m;
            }
        }
        acc * self.spec.volume()
    }

    /// Spectral derivative `∂_axis` of one component.
    pub fn derivative(&self, comp: &[Complex64], axis: usize) -> Vec<Complex64> {
        let d = self.dim();
        comp.iter()
            .enumerate()
            .map(|(idx, c)| c * Complex64::new(0.0, self.kd[idx * d + axis]))
            .collect()
    }

    /// `max_k |k·F(k)|` using derivative wavevectors.
    pub fn max_divergence(&self, field: &SpectralField) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for idx in 0..self.len() {
            let kd = &self.kd[idx * d..(idx + 1) * d];
            let mut div = Complex64::new(0.0, 0.0);
            for (axis, comp) in field.components.iter().enumerate() {
                div += comp[idx] * kd[axis];
            }
            worst = worst.max(div.norm());
        }
        worst
    }

    pub(crate) fn check_real(&self, field: &RealField) -> Result<()> {
        for comp in &field.components {
            if comp.len() != self.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.len(),
                    found: comp.len(),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn check_spectral(&self, field: &SpectralField) -> Result<()> {
        for comp in &field.components {
            if comp.len() != self.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.len(),
                    found: comp.len(),
                });
            }
        }
        Ok(())
    }

    /// In-place unnormalized multi-dimensional FFT.
    fn fft_nd(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.backward } else { &self.forward };
        let n = self.spec.n_points();
        let len = data.len();
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut lines = vec![Complex64::new(0.0, 0.0); len];
        for axis in 0..self.dim() {
            let stride = n.pow((self.dim() - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = n * stride;
            // Gather strided lines into contiguous rows, transform, scatter back.
            let mut row = 0;
            for outer in (0..len).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for j in 0..n {
                        lines[row * n + j] = data[base + j * stride];
                    }
                    row += 1;
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            let mut row = 0;
            for outer in (0..len).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for j in 0..n {
                        data[base + j * stride] = lines[row * n + j];
                    }
                    row += 1;
                }
            }
        }
    }
}
