//! Homogeneous Littlewood–Paley blocks and the two characterizations of the
//! `Ḃ^s_{∞,∞}` norm (dyadic blocks, and the heat flow for `s < 0`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::semigroup::{log_time_grid, propagate, sup_over_time, PropagatorSpec};
use crate::spectral::{GridSpec, SpectralField};

fn bump(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth radial cutoff: 1 on `|ξ| <= 3/4`, 0 on `|ξ| >= 1`.
pub fn chi(r: f64) -> f64 {
    if r <= 0.75 {
        return 1.0;
    }
    if r >= 1.0 {
        return 0.0;
    }
    let x = (1.0 - r) / 0.25;
    let (a, b) = (bump(x), bump(1.0 - x));
    a / (a + b)
}

/// Annulus profile `φ(ξ) = χ(ξ/2) - χ(ξ)`, supported on `3/4 <= |ξ| <= 2`.
pub fn phi(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// Dyadic shell multipliers `φ(2^{-j}|k|)` tabulated on one grid.
pub struct DyadicFilter {
    grid: GridSpec,
    j_min: i32,
    j_max: i32,
    shells: Vec<Vec<f64>>,
}

impl DyadicFilter {
    /// Shells from `j = 0` (touching `|k| = 1`) to `⌈log₂(n/3)⌉ + 1`.
    pub fn new(grid: GridSpec) -> Self {
        let cutoff = grid.n() as f64 / 3.0;
        let j_min = 0;
        let j_max = cutoff.log2().ceil() as i32 + 1;
        let ctx = grid.ctx();
        let shells = (j_min..=j_max)
            .map(|j| {
                let s = 2f64.powi(-j);
                ctx.ksq.iter().map(|&k2| phi(s * k2.sqrt())).collect()
            })
            .collect();
        DyadicFilter { grid, j_min, j_max, shells }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn j_range(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    /// Multiplier table of shell `j`, or `None` outside the range.
    pub fn shell(&self, j: i32) -> Option<&[f64]> {
        if j < self.j_min || j > self.j_max {
            return None;
        }
        Some(&self.shells[(j - self.j_min) as usize])
    }

    /// `Δ_j f`; shells outside the range give the zero field.
    pub fn dyadic_block(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_grid(f)?;
        f.check_mean_zero()?;
        Ok(self.block_unchecked(f, j))
    }

    fn block_unchecked(&self, f: &SpectralField, j: i32) -> SpectralField {
        let Some(mult) = self.shell(j) else {
            return SpectralField::zeros(self.grid);
        };
        let mut out = f.clone();
        for c in 0..3 {
            for (z, &w) in out.component_mut(c).iter_mut().zip(mult) {
                *z *= w;
            }
        }
        out
    }

    /// `sup_j 2^{sj} ‖Δ_j f‖_∞`.
    pub fn besov_norm_lp(&self, f: &SpectralField, s: f64) -> Result<f64> {
        self.check_grid(f)?;
        f.check_mean_zero()?;
        Ok(self.besov_norm_lp_unchecked(f, s))
    }

    pub(crate) fn besov_norm_lp_unchecked(&self, f: &SpectralField, s: f64) -> f64 {
        self.j_range()
            .map(|j| 2f64.powf(s * j as f64) * self.block_unchecked(f, j).sup_norm())
            .fold(0.0, f64::max)
    }

    /// `sup_t t^{-s/2α} ‖e^{-t(-Δ)^α} f‖_∞` over the log time grid, refined between grid points.
    pub fn besov_norm_heat(&self, f: &SpectralField, s: f64, alpha: f64) -> Result<f64> {
        self.check_grid(f)?;
        if !(s < 0.0) {
            return Err(Error::InvalidArgument(format!("heat characterization needs s < 0, got {s}")));
        }
        PropagatorSpec::new(alpha, 1.0, 0.0)?;
        f.check_mean_zero()?;
        let w = -s / (2.0 * alpha);
        let (_, v) = sup_over_time(|t| t.powf(w) * propagate(f, &PropagatorSpec { alpha, kappa: 1.0, t }).sup_norm());
        Ok(v)
    }

    /// Both norms and their ratio.
    pub fn report(&self, f: &SpectralField, s: f64, alpha: f64) -> Result<BesovReport> {
        let lp_norm = self.besov_norm_lp(f, s)?;
        let heat_norm = self.besov_norm_heat(f, s, alpha)?;
        Ok(BesovReport { order_s: s, alpha, lp_norm, heat_norm, ratio: heat_norm / lp_norm, t_grid: log_time_grid() })
    }

    fn check_grid(&self, f: &SpectralField) -> Result<()> {
        if f.grid() != self.grid {
            return Err(Error::GridMismatch { left: self.grid.n(), right: f.grid().n() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BesovReport {
    pub order_s: f64,
    pub alpha: f64,
    pub lp_norm: f64,
    pub heat_norm: f64,
    pub ratio: f64,
    #[serde(skip)]
    pub t_grid: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, sine_mode};
    use proptest::prelude::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    #[test]
    fn cutoff_plateaus() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(1.2), 0.0);
        assert_eq!(phi(0.5), 0.0);
        assert_eq!(phi(1.0), 1.0);
        assert!((chi(0.875) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chi_is_monotone_on_transition() {
        let mut last = 1.0;
        for i in 0..=1000 {
            let v = chi(0.75 + 0.25 * i as f64 / 1000.0);
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn partition_of_unity_at_1_7() {
        let f = DyadicFilter::new(grid(32));
        let s: f64 = f.j_range().map(|j| phi(2f64.powi(-j) * 1.7)).sum();
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn partition_of_unity_on_grid() {
        for n in [8, 16, 32] {
            let g = grid(n);
            let filter = DyadicFilter::new(g);
            let ctx = g.ctx();
            for (idx, &k2) in ctx.ksq.iter().enumerate() {
                if k2 == 0.0 {
                    continue;
                }
                let s: f64 = filter.j_range().map(|j| filter.shell(j).unwrap()[idx]).sum();
                assert!((s - 1.0).abs() < 1e-10, "n = {n}, |k|² = {k2}");
            }
        }
    }

    #[test]
    fn shells_have_annular_support() {
        let g = grid(32);
        let filter = DyadicFilter::new(g);
        let ctx = g.ctx();
        for j in filter.j_range() {
            let (lo, hi) = (3.0 * 2f64.powi(j - 2), 2f64.powi(j + 1));
            for (idx, &k2) in ctx.ksq.iter().enumerate() {
                let k = k2.sqrt();
                if filter.shell(j).unwrap()[idx] != 0.0 {
                    assert!(k >= lo && k <= hi);
                }
            }
        }
    }

    #[test]
    fn sine_lives_in_block_zero() {
        let g = grid(16);
        let filter = DyadicFilter::new(g);
        let f = sine_mode(g, [1, 0, 0], [0.0, 0.0, 2.5]);
        assert_eq!(filter.dyadic_block(&f, 0).unwrap(), f);
        for j in [-3, -1, 1, 2, 3, 4, 40] {
            assert_eq!(filter.dyadic_block(&f, j).unwrap().max_abs_coefficient(), 0.0);
        }
        for s in [-2.0, -0.5, 0.0, 1.0] {
            assert!((filter.besov_norm_lp(&f, s).unwrap() - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_field_blocks_and_norms() {
        let g = grid(8);
        let filter = DyadicFilter::new(g);
        let z = SpectralField::zeros(g);
        for j in filter.j_range() {
            assert_eq!(filter.dyadic_block(&z, j).unwrap(), z);
        }
        assert_eq!(filter.besov_norm_lp(&z, -1.0).unwrap(), 0.0);
        assert_eq!(filter.besov_norm_heat(&z, -1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn blocks_reconstruct() {
        let g = grid(32);
        let filter = DyadicFilter::new(g);
        let f = random_field(g, 10, 99, false);
        let mut sum = SpectralField::zeros(g);
        for j in filter.j_range() {
            sum.axpy(1.0, &filter.dyadic_block(&f, j).unwrap());
        }
        let real = f.inverse_transform();
        assert!(sum.inverse_transform().max_abs_diff(&real) <= 1e-10 * real.sup_norm());
    }

    #[test]
    fn single_shell_at_j2() {
        // |k| = 4 sits where φ(2^{-2}·4) = 1 and neighbors vanish
        let g = grid(32);
        let filter = DyadicFilter::new(g);
        let f = sine_mode(g, [4, 0, 0], [0.0, 1.0, 0.0]);
        let v = filter.besov_norm_lp(&f, -1.0).unwrap();
        assert!((v - 0.25).abs() < 1e-14);
        // |k| = 3 has φ(3/2) = 1, so it belongs to shell 1 alone
        let h = sine_mode(g, [3, 0, 0], [0.0, 1.0, 0.0]);
        assert!((filter.besov_norm_lp(&h, -1.0).unwrap() - 0.5).abs() < 1e-14);
        // |k|² = 5 straddles shells 1 and 2
        let q = sine_mode(g, [2, 1, 0], [0.0, 0.0, 1.0]);
        let v = filter.besov_norm_lp(&q, -1.0).unwrap();
        let r = 5f64.sqrt();
        let bound = (0.5 * phi(r / 2.0)).max(0.25 * phi(r / 4.0));
        assert!((v - bound).abs() < 1e-14 && v <= 0.5);
    }

    #[test]
    fn heat_norm_single_mode() {
        let g = grid(16);
        let filter = DyadicFilter::new(g);
        let f = sine_mode(g, [1, 0, 0], [0.0, 0.0, 1.0]);
        let v = filter.besov_norm_heat(&f, -1.0, 1.0).unwrap();
        let expect = 0.5f64.sqrt() * (-0.5f64).exp();
        assert!((v - expect).abs() < 1e-10, "{v} vs {expect}");
        assert!((expect - 0.4289).abs() < 1e-4);
    }

    #[test]
    fn heat_norm_rejects_nonnegative_order() {
        let g = grid(8);
        let filter = DyadicFilter::new(g);
        let f = random_field(g, 2, 1, true);
        assert!(filter.besov_norm_heat(&f, 0.0, 1.0).is_err());
        assert!(filter.besov_norm_heat(&f, 0.5, 1.0).is_err());
    }

    #[test]
    fn mean_mode_rejected() {
        let g = grid(8);
        let filter = DyadicFilter::new(g);
        let f = SpectralField::from_fn(g, |x| [1.0 + x[0].sin(), 0.0, 0.0]);
        assert!(matches!(filter.besov_norm_lp(&f, -1.0), Err(Error::NonZeroMean(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn norms_are_homogeneous_and_subadditive(seed in 0u64..1000, c in -3.0f64..3.0) {
            let g = grid(8);
            let filter = DyadicFilter::new(g);
            let f = random_field(g, 2, seed, true);
            let h = random_field(g, 2, seed + 7919, true);
            for s in [-0.5, -1.0] {
                let nf = filter.besov_norm_lp(&f, s).unwrap();
                let nh = filter.besov_norm_lp(&h, s).unwrap();
                let ncf = filter.besov_norm_lp(&f.scaled(c), s).unwrap();
                prop_assert!((ncf - c.abs() * nf).abs() <= 1e-10 * nf.max(1.0));
                let nsum = filter.besov_norm_lp(&(&f + &h), s).unwrap();
                prop_assert!(nsum <= nf + nh + 1e-10);

                let hf = filter.besov_norm_heat(&f, s, 1.0).unwrap();
                let hh = filter.besov_norm_heat(&h, s, 1.0).unwrap();
                let hcf = filter.besov_norm_heat(&f.scaled(c), s, 1.0).unwrap();
                prop_assert!((hcf - c.abs() * hf).abs() <= 1e-10 * hf.max(1.0));
                let hsum = filter.besov_norm_heat(&(&f + &h), s, 1.0).unwrap();
                prop_assert!(hsum <= hf + hh + 1e-10);
            }
        }
    }
}
