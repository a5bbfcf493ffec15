use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of the Nyquist band kept after a nonlinear product.
pub const DEALIAS_FRACTION: f64 = 2.0 / 3.0;

/// Side length of the periodic box.
pub const BOX_LENGTH: f64 = 2.0 * PI;

/// A cubic periodic grid on `[0, 2π)³` with `n` points per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n: 32 }
    }
}

impl GridSpec {
    pub fn new(n_per_dim: usize) -> Result<Self> {
        if n_per_dim < 8 || !n_per_dim.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n_per_dim));
        }
        Ok(GridSpec { n: n_per_dim })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of grid points (and Fourier modes).
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest retained wavenumber component after dealiasing.
    pub fn dealias_cutoff(&self) -> i64 {
        // |k_i| <= n/3, i.e. 3|k_i| <= n
        (self.n / 3) as i64
    }

    /// Signed wavenumber of array index `i` along one axis. The Nyquist index maps to `+n/2`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Array index of the signed wavenumber `k` along one axis.
    #[inline]
    pub fn index_of(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    #[inline]
    pub fn linear_index(&self, i0: usize, i1: usize, i2: usize) -> usize {
        i0 + self.n * (i1 + self.n * i2)
    }

    /// Linear index of the mode with integer wavevector `k`.
    pub fn mode_index(&self, k: [i64; 3]) -> usize {
        self.linear_index(self.index_of(k[0]), self.index_of(k[1]), self.index_of(k[2]))
    }

    /// Coordinates of grid point `(i0, i1, i2)`.
    pub fn point(&self, i0: usize, i1: usize, i2: usize) -> [f64; 3] {
        let h = BOX_LENGTH / self.n as f64;
        [i0 as f64 * h, i1 as f64 * h, i2 as f64 * h]
    }

    pub(crate) fn ctx(&self) -> Arc<GridCtx> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GridCtx>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("grid cache poisoned");
        guard
            .entry(self.n)
            .or_insert_with(|| Arc::new(GridCtx::new(*self)))
            .clone()
    }
}

/// Per-grid tables shared read-only by every field on that grid.
pub(crate) struct GridCtx {
    pub spec: GridSpec,
    pub fwd: Arc<dyn Fft<f64>>,
    pub inv: Arc<dyn Fft<f64>>,
    /// Derivative wavenumber per axis index; zero at Nyquist so `ik` keeps fields real.
    pub kd: Vec<f64>,
    /// `|k|²` per linear index, Nyquist counted as `n/2`.
    pub ksq: Vec<f64>,
    /// Linear index of `-k` for every `k`.
    pub neg: Vec<usize>,
    /// Whether a mode survives the 2/3 rule.
    pub keep: Vec<bool>,
}

impl GridCtx {
    fn new(spec: GridSpec) -> Self {
        let n = spec.n;
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let kd: Vec<f64> = (0..n)
            .map(|i| if i == n / 2 { 0.0 } else { spec.wavenumber(i) as f64 })
            .collect();
        let km: Vec<f64> = (0..n).map(|i| spec.wavenumber(i) as f64).collect();
        let cut = spec.dealias_cutoff();
        let mut ksq = vec![0.0; spec.len()];
        let mut neg = vec![0; spec.len()];
        let mut keep = vec![false; spec.len()];
        for i2 in 0..n {
            for i1 in 0..n {
                for i0 in 0..n {
                    let idx = spec.linear_index(i0, i1, i2);
                    ksq[idx] = km[i0] * km[i0] + km[i1] * km[i1] + km[i2] * km[i2];
                    neg[idx] = spec.linear_index((n - i0) % n, (n - i1) % n, (n - i2) % n);
                    keep[idx] = [i0, i1, i2].iter().all(|&i| spec.wavenumber(i).abs() <= cut);
                }
            }
        }
        GridCtx { spec, fwd, inv, kd, ksq, neg, keep }
    }

    /// Derivative wavevector at `(i0, i1, i2)`.
    #[inline]
    pub fn kvec(&self, i0: usize, i1: usize, i2: usize) -> [f64; 3] {
        [self.kd[i0], self.kd[i1], self.kd[i2]]
    }

    /// In-place unnormalized 3-D DFT in the direction given by `inverse`.
    pub fn fft3(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.spec.n;
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // axis 0 is contiguous
        plan.process_with_scratch(data, &mut scratch);

        let mut buf = vec![Complex64::default(); n * n];
        // axis 1: transpose each i2-plane
        for plane in data.chunks_exact_mut(n * n) {
            for i1 in 0..n {
                for i0 in 0..n {
                    buf[i0 * n + i1] = plane[i1 * n + i0];
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for i1 in 0..n {
                for i0 in 0..n {
                    plane[i1 * n + i0] = buf[i0 * n + i1];
                }
            }
        }
        // axis 2: gather (i0, i2) slabs for each i1
        let nn = n * n;
        for i1 in 0..n {
            for i2 in 0..n {
                let row = &data[i1 * n + i2 * nn..i1 * n + i2 * nn + n];
                for (i0, v) in row.iter().enumerate() {
                    buf[i0 * n + i2] = *v;
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for i2 in 0..n {
                let row = &mut data[i1 * n + i2 * nn..i1 * n + i2 * nn + n];
                for (i0, v) in row.iter_mut().enumerate() {
                    *v = buf[i0 * n + i2];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(GridSpec::new(6).is_err());
        assert!(GridSpec::new(9).is_err());
        assert!(GridSpec::new(8).is_ok());
    }

    #[test]
    fn wavenumber_roundtrip() {
        let g = GridSpec::new(16).unwrap();
        for i in 0..16 {
            assert_eq!(g.index_of(g.wavenumber(i)), i);
        }
        assert_eq!(g.wavenumber(8), 8);
        assert_eq!(g.wavenumber(9), -7);
        assert_eq!(g.dealias_cutoff(), 5);
    }

    #[test]
    fn negation_table_is_an_involution() {
        let g = GridSpec::new(8).unwrap();
        let ctx = g.ctx();
        for idx in 0..g.len() {
            assert_eq!(ctx.neg[ctx.neg[idx]], idx);
        }
    }
}
