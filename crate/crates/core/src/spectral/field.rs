use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::grid::{GridCtx, GridSpec};
use crate::error::{Error, Result};

/// Relative threshold on `max |k·f̂|` below which a field counts as divergence-free.
pub const SOLENOIDAL_TOL: f64 = 1e-12;

/// Real-space samples of a 3-component vector field, component-major with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVectorField {
    grid: GridSpec,
    comps: [Vec<f64>; 3],
}

impl RealVectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        RealVectorField { grid, comps: [vec![0.0; n], vec![0.0; n], vec![0.0; n]] }
    }

    pub fn from_components(grid: GridSpec, comps: [Vec<f64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::DimensionMismatch { expected: grid.len(), actual: c.len() });
            }
        }
        Ok(RealVectorField { grid, comps })
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = RealVectorField::zeros(grid);
        let n = grid.n();
        for i2 in 0..n {
            for i1 in 0..n {
                for i0 in 0..n {
                    let v = f(grid.point(i0, i1, i2));
                    let idx = grid.linear_index(i0, i1, i2);
                    for (comp, x) in out.comps.iter_mut().zip(v) {
                        comp[idx] = x;
                    }
                }
            }
        }
        out
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn into_components(self) -> [Vec<f64>; 3] {
        self.comps
    }

    /// Pointwise Euclidean magnitude, maximized over the grid.
    pub fn sup_norm(&self) -> f64 {
        let [x, y, z] = &self.comps;
        x.iter()
            .zip(y)
            .zip(z)
            .map(|((a, b), c)| a * a + b * b + c * c)
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &RealVectorField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// A real vector field on the periodic grid, stored as Fourier coefficients
/// `f(x) = Σ_k f̂(k) e^{ik·x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    comps: [Vec<Complex64>; 3],
    solenoidal: bool,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        let z = Complex64::default();
        SpectralField { grid, comps: [vec![z; n], vec![z; n], vec![z; n]], solenoidal: true }
    }

    pub fn from_coefficients(grid: GridSpec, comps: [Vec<Complex64>; 3], solenoidal: bool) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::DimensionMismatch { expected: grid.len(), actual: c.len() });
            }
        }
        Ok(SpectralField { grid, comps, solenoidal })
    }

    /// Transforms real-space samples to Fourier coefficients.
    pub fn forward_transform(values: &RealVectorField) -> Self {
        let grid = values.grid;
        let ctx = grid.ctx();
        let (a, b) = forward_pair(&ctx, &values.comps[0], &values.comps[1]);
        let c = forward_one(&ctx, &values.comps[2]);
        SpectralField { grid, comps: [a, b, c], solenoidal: false }
    }

    /// Samples `f(x)` on the grid and transforms.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        Self::forward_transform(&RealVectorField::from_fn(grid, f))
    }

    pub fn inverse_transform(&self) -> RealVectorField {
        let ctx = self.grid.ctx();
        let (a, b) = inverse_pair(&ctx, &self.comps[0], &self.comps[1]);
        let c = inverse_one(&ctx, &self.comps[2]);
        RealVectorField { grid: self.grid, comps: [a, b, c] }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub(crate) fn components_mut(&mut self) -> &mut [Vec<Complex64>; 3] {
        &mut self.comps
    }

    pub fn mean_mode(&self) -> [Complex64; 3] {
        [self.comps[0][0], self.comps[1][0], self.comps[2][0]]
    }

    pub fn mode(&self, k: [i64; 3]) -> [Complex64; 3] {
        let idx = self.grid.mode_index(k);
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    /// Sets the coefficient at `k` and its conjugate partner at `-k`.
    pub fn set_mode_pair(&mut self, k: [i64; 3], value: [Complex64; 3]) {
        let idx = self.grid.mode_index(k);
        let nidx = self.grid.mode_index([-k[0], -k[1], -k[2]]);
        for (comp, v) in self.comps.iter_mut().zip(value) {
            comp[idx] = v;
            comp[nidx] = v.conj();
        }
    }

    pub fn is_flagged_solenoidal(&self) -> bool {
        self.solenoidal
    }

    pub(crate) fn set_solenoidal(&mut self, flag: bool) {
        self.solenoidal = flag;
    }

    pub fn with_solenoidal_flag(mut self, flag: bool) -> Self {
        self.solenoidal = flag;
        self
    }

    /// `max_k |k · f̂(k)|` using derivative wavenumbers.
    pub fn divergence_residual(&self) -> f64 {
        let ctx = self.grid.ctx();
        let n = self.grid.n();
        let mut worst = 0.0f64;
        let mut idx = 0;
        for i2 in 0..n {
            for i1 in 0..n {
                for i0 in 0..n {
                    let k = ctx.kvec(i0, i1, i2);
                    let d = self.comps[0][idx] * k[0] + self.comps[1][idx] * k[1] + self.comps[2][idx] * k[2];
                    worst = worst.max(d.norm());
                    idx += 1;
                }
            }
        }
        worst
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter().map(|z| z.norm())).fold(0.0, f64::max)
    }

    /// Checks the divergence-free invariant numerically.
    pub fn check_solenoidal(&self) -> Result<()> {
        let residual = self.divergence_residual();
        let threshold = SOLENOIDAL_TOL * self.max_abs_coefficient().max(f64::MIN_POSITIVE);
        if residual > threshold {
            return Err(Error::NotSolenoidal { residual, threshold });
        }
        Ok(())
    }

    pub fn check_mean_zero(&self) -> Result<()> {
        let m = self.mean_mode().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = self.max_abs_coefficient();
        if m > 1e-14 * scale.max(1e-300) {
            return Err(Error::NonZeroMean(m));
        }
        Ok(())
    }

    pub fn ensure_same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch { left: self.grid.n(), right: other.grid.n() });
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale_mut(s);
        out
    }

    pub fn scale_mut(&mut self, s: f64) {
        for c in self.comps.iter_mut() {
            for z in c.iter_mut() {
                *z *= s;
            }
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y * s;
            }
        }
        self.solenoidal &= other.solenoidal;
    }

    /// Pointwise-in-space sup norm of the real field.
    pub fn sup_norm(&self) -> f64 {
        self.inverse_transform().sup_norm()
    }

    /// Grid L² inner product `(1/N³) Σ_x f(x)·g(x)`, evaluated by Parseval.
    pub fn l2_inner(&self, other: &SpectralField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum::<f64>())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).sqrt()
    }

    /// Largest coefficient-wise difference.
    pub fn max_coeff_diff(&self, other: &SpectralField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// Largest `max_i |k_i|` among modes with a coefficient above `tol`.
    pub fn band_extent(&self, tol: f64) -> i64 {
        let n = self.grid.n();
        let mut ext = 0;
        let mut idx = 0;
        for i2 in 0..n {
            for i1 in 0..n {
                for i0 in 0..n {
                    if self.comps.iter().any(|c| c[idx].norm() > tol) {
                        let m = [i0, i1, i2].iter().map(|&i| self.grid.wavenumber(i).abs()).max().unwrap();
                        ext = ext.max(m);
                    }
                    idx += 1;
                }
            }
        }
        ext
    }

    /// Multiplies mode `idx` of every component by `m[idx]`.
    pub(crate) fn multiply_modes(&mut self, m: &[f64]) {
        for c in self.comps.iter_mut() {
            for (z, &w) in c.iter_mut().zip(m) {
                *z *= w;
            }
        }
    }

    /// Multiplies every mode by `m(|k|²)` (a real radial multiplier).
    pub fn apply_radial(&self, m: impl Fn(f64) -> f64) -> SpectralField {
        let ctx = self.grid.ctx();
        let mult: Vec<f64> = ctx.ksq.iter().map(|&k2| m(k2)).collect();
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            for (z, &w) in c.iter_mut().zip(&mult) {
                *z *= w;
            }
        }
        out
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<&SpectralField> for f64 {
    type Output = SpectralField;
    fn mul(self, rhs: &SpectralField) -> SpectralField {
        rhs.scaled(self)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

/// A real scalar field stored as Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField { grid, coeffs: vec![Complex64::default(); grid.len()] }
    }

    pub fn from_coefficients(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), actual: coeffs.len() });
        }
        Ok(ScalarField { grid, coeffs })
    }

    pub fn forward_transform(grid: GridSpec, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), actual: values.len() });
        }
        Ok(ScalarField { grid, coeffs: forward_one(&grid.ctx(), values) })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let n = grid.n();
        let mut v = vec![0.0; grid.len()];
        for i2 in 0..n {
            for i1 in 0..n {
                for i0 in 0..n {
                    v[grid.linear_index(i0, i1, i2)] = f(grid.point(i0, i1, i2));
                }
            }
        }
        Self::forward_transform(grid, &v).expect("sizes agree")
    }

    pub fn inverse_transform(&self) -> Vec<f64> {
        inverse_one(&self.grid.ctx(), &self.coeffs)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn mode(&self, k: [i64; 3]) -> Complex64 {
        self.coeffs[self.grid.mode_index(k)]
    }

    pub fn max_coeff_diff(&self, other: &ScalarField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn forward_one(ctx: &GridCtx, a: &[f64]) -> Vec<Complex64> {
    let norm = 1.0 / a.len() as f64;
    let mut z: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    ctx.fft3(&mut z, false);
    for v in z.iter_mut() {
        *v *= norm;
    }
    // enforce exact Hermitian symmetry
    let mut out = z.clone();
    for (idx, o) in out.iter_mut().enumerate() {
        *o = (z[idx] + z[ctx.neg[idx]].conj()) * 0.5;
    }
    out
}

/// Transforms two real arrays with one complex FFT.
pub(crate) fn forward_pair(ctx: &GridCtx, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let norm = 1.0 / a.len() as f64;
    let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    ctx.fft3(&mut z, false);
    let mut fa = vec![Complex64::default(); z.len()];
    let mut fb = vec![Complex64::default(); z.len()];
    for idx in 0..z.len() {
        let zk = z[idx] * norm;
        let zm = z[ctx.neg[idx]].conj() * norm;
        fa[idx] = (zk + zm) * 0.5;
        // (zk - zm) / 2i
        let d = (zk - zm) * 0.5;
        fb[idx] = Complex64::new(d.im, -d.re);
    }
    (fa, fb)
}

pub(crate) fn inverse_one(ctx: &GridCtx, a: &[Complex64]) -> Vec<f64> {
    let mut z = a.to_vec();
    ctx.fft3(&mut z, true);
    z.into_iter().map(|v| v.re).collect()
}

/// Inverse-transforms two Hermitian coefficient arrays with one complex FFT.
pub(crate) fn inverse_pair(ctx: &GridCtx, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let mut z: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + Complex64::new(-y.im, y.re)).collect();
    ctx.fft3(&mut z, true);
    z.into_iter().map(|v| (v.re, v.im)).unzip()
}

/// Forward-transforms a batch of real arrays, pairing them up.
pub(crate) fn forward_many(ctx: &GridCtx, arrays: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(arrays.len());
    for chunk in arrays.chunks(2) {
        match chunk {
            [a, b] => {
                let (fa, fb) = forward_pair(ctx, a, b);
                out.push(fa);
                out.push(fb);
            }
            [a] => out.push(forward_one(ctx, a)),
            _ => unreachable!(),
        }
    }
    out
}

pub(crate) fn inverse_many(ctx: &GridCtx, arrays: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(arrays.len());
    for chunk in arrays.chunks(2) {
        match chunk {
            [a, b] => {
                let (fa, fb) = inverse_pair(ctx, a, b);
                out.push(fa);
                out.push(fb);
            }
            [a] => out.push(inverse_one(ctx, a)),
            _ => unreachable!(),
        }
    }
    out
}
