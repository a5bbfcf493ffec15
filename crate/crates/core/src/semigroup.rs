//! The fractional heat semigroup `e^{-κt(-Δ)^α}` and probes of its smoothing estimates.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::littlewood_paley::DyadicFilter;
use crate::random::random_field;
use crate::spectral::{curl, inverse_many, leray_project, GridSpec, SpectralField};

/// Number of sample times in [`log_time_grid`].
pub const T_GRID_POINTS: usize = 49;
pub const T_GRID_MIN: f64 = 1e-6;
pub const T_GRID_MAX: f64 = 1e2;

/// Golden-section steps used to refine a supremum between grid points.
const REFINE_STEPS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorSpec {
    pub alpha: f64,
    pub kappa: f64,
    pub t: f64,
}

impl PropagatorSpec {
    pub fn new(alpha: f64, kappa: f64, t: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} and kappa = {kappa} must be positive")));
        }
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!("negative time {t}")));
        }
        Ok(PropagatorSpec { alpha, kappa, t })
    }

    /// Multiplier `exp(-κ t |k|^{2α})` as a function of `|k|²`.
    #[inline]
    pub fn multiplier(&self, ksq: f64) -> f64 {
        (-self.kappa * self.t * ksq.powf(self.alpha)).exp()
    }
}

/// 49 log-uniform times on `[1e-6, 1e2]`.
pub fn log_time_grid() -> Vec<f64> {
    let lo = T_GRID_MIN.log10();
    let hi = T_GRID_MAX.log10();
    (0..T_GRID_POINTS)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (T_GRID_POINTS - 1) as f64))
        .collect()
}

/// Supremum of `g` over the log time grid, refined by golden-section search
/// (in `log t`) around the best grid point. Returns `(t*, g(t*))`.
pub fn sup_over_time(g: impl Fn(f64) -> f64) -> (f64, f64) {
    let ts = log_time_grid();
    let vals: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
    let (ibest, &vbest) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    let (mut lo, mut hi) = (
        ts[ibest.saturating_sub(1)].ln(),
        ts[(ibest + 1).min(ts.len() - 1)].ln(),
    );
    let mut best = (ts[ibest], vbest);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = g(x1.exp());
    let mut f2 = g(x2.exp());
    for _ in 0..REFINE_STEPS {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = g(x1.exp());
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = g(x2.exp());
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best.1 {
            best = (x.exp(), v);
        }
    }
    best
}

/// Applies `e^{-κt(-Δ)^α}` mode by mode.
pub fn heat_propagate(f: &SpectralField, t: f64, alpha: f64, kappa: f64) -> Result<SpectralField> {
    let spec = PropagatorSpec::new(alpha, kappa, t)?;
    Ok(propagate(f, &spec))
}

/// `exp(-κt|k|^{2α})` per linear mode index.
pub(crate) fn decay_table(grid: GridSpec, spec: &PropagatorSpec) -> Vec<f64> {
    grid.ctx().ksq.iter().map(|&k2| spec.multiplier(k2)).collect()
}

pub(crate) fn propagate(f: &SpectralField, spec: &PropagatorSpec) -> SpectralField {
    if spec.t == 0.0 {
        return f.clone();
    }
    let flag = f.is_flagged_solenoidal();
    f.apply_radial(|k2| spec.multiplier(k2)).with_solenoidal_flag(flag)
}

/// `e^{-κτ(-Δ)^α} ℙ` applied to a tensor divergence `∇·T`, followed by `∇×` when `with_curl`.
///
/// All factors are Fourier multipliers and commute; they are applied as
/// projection, curl, then heat.
pub fn duhamel_kernel(
    tensor_divergence: &SpectralField,
    tau: f64,
    alpha: f64,
    kappa: f64,
    with_curl: bool,
) -> Result<SpectralField> {
    let spec = PropagatorSpec::new(alpha, kappa, tau)?;
    let mut out = leray_project(tensor_divergence);
    if with_curl {
        out = curl(&out);
    }
    Ok(propagate(&out, &spec))
}

/// Pointwise Frobenius norm of the Jacobian `∂_j f_i`, maximized over the grid.
pub fn gradient_sup_norm(f: &SpectralField) -> f64 {
    let grid = f.grid();
    let ctx = grid.ctx();
    let n = grid.n();
    let mut derivs = vec![vec![num_complex::Complex64::default(); grid.len()]; 9];
    let mut idx = 0;
    for i2 in 0..n {
        for i1 in 0..n {
            for i0 in 0..n {
                let k = ctx.kvec(i0, i1, i2);
                for c in 0..3 {
                    let v = f.component(c)[idx] * num_complex::Complex64::new(0.0, 1.0);
                    for j in 0..3 {
                        derivs[3 * c + j][idx] = v * k[j];
                    }
                }
                idx += 1;
            }
        }
    }
    let refs: Vec<&[num_complex::Complex64]> = derivs.iter().map(|v| v.as_slice()).collect();
    let real = inverse_many(&ctx, &refs);
    (0..grid.len())
        .map(|p| real.iter().map(|r| r[p] * r[p]).sum::<f64>())
        .fold(0.0, f64::max)
        .sqrt()
}

/// Estimated smoothing constants over a random corpus.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub alpha: f64,
    pub s0: f64,
    pub s1: f64,
    pub corpus_size: usize,
    pub grid_n: usize,
    /// `sup t^{(s1-s0)/2α} ‖e^{-t(-Δ)^α} f‖_{Ḃ^{s1}} / ‖f‖_{Ḃ^{s0}}`
    pub besov_constant: f64,
    /// `sup t^{1/2α} ‖∇ e^{-t(-Δ)^α} f‖_∞ / ‖f‖_∞`
    pub gradient_constant: f64,
    /// Same as `gradient_constant` with `ℙ` composed in.
    pub leray_gradient_constant: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeSpec {
    pub grid: GridSpec,
    pub alpha: f64,
    pub s0: f64,
    pub s1: f64,
    pub corpus_size: usize,
    /// Highest `max_i |k_i|` of the random fields.
    pub band: i64,
    pub seed: u64,
}

impl ProbeSpec {
    pub fn new(grid: GridSpec, alpha: f64, s0: f64, s1: f64, corpus_size: usize) -> Self {
        ProbeSpec { grid, alpha, s0, s1, corpus_size, band: grid.dealias_cutoff(), seed: 0 }
    }
}

/// Per-field smoothing ratios: `(besov, gradient, leray_gradient)`.
pub fn smoothing_ratios(f: &SpectralField, filter: &DyadicFilter, alpha: f64, s0: f64, s1: f64) -> [f64; 3] {
    let denom_b = filter.besov_norm_lp_unchecked(f, s0);
    let denom_inf = f.sup_norm();
    let pf = leray_project(f);
    let wb = (s1 - s0) / (2.0 * alpha);
    let wg = 1.0 / (2.0 * alpha);
    let heat = |g: &SpectralField, t: f64| propagate(g, &PropagatorSpec { alpha, kappa: 1.0, t });
    let (_, besov) = sup_over_time(|t| t.powf(wb) * filter.besov_norm_lp_unchecked(&heat(f, t), s1));
    let (_, grad) = sup_over_time(|t| t.powf(wg) * gradient_sup_norm(&heat(f, t)));
    let (_, lgrad) = sup_over_time(|t| t.powf(wg) * gradient_sup_norm(&heat(&pf, t)));
    [besov / denom_b, grad / denom_inf, lgrad / denom_inf]
}

/// Per-field smoothing ratios over the probe corpus, in corpus order.
pub fn smoothing_probe_rows(spec: &ProbeSpec) -> Result<Vec<[f64; 3]>> {
    if spec.s0 > spec.s1 {
        return Err(Error::InvalidArgument(format!("need s0 <= s1, got {} > {}", spec.s0, spec.s1)));
    }
    PropagatorSpec::new(spec.alpha, 1.0, 0.0)?;
    let filter = DyadicFilter::new(spec.grid);
    Ok((0..spec.corpus_size)
        .into_par_iter()
        .map(|i| {
            let f = random_field(spec.grid, spec.band, spec.seed.wrapping_mul(1_000_003).wrapping_add(i as u64), false);
            smoothing_ratios(&f, &filter, spec.alpha, spec.s0, spec.s1)
        })
        .collect())
}

/// Estimates the smoothing constants as suprema over a random band-limited corpus.
pub fn smoothing_probe(spec: &ProbeSpec) -> Result<ProbeReport> {
    let ratios = smoothing_probe_rows(spec)?;
    Ok(probe_summary(spec, &ratios))
}

/// Column maxima of [`smoothing_probe_rows`].
pub fn probe_summary(spec: &ProbeSpec, ratios: &[[f64; 3]]) -> ProbeReport {
    let max = |c: usize| ratios.iter().map(|r| r[c]).fold(0.0, f64::max);
    ProbeReport {
        alpha: spec.alpha,
        s0: spec.s0,
        s1: spec.s1,
        corpus_size: spec.corpus_size,
        grid_n: spec.grid.n(),
        besov_constant: max(0),
        gradient_constant: max(1),
        leray_gradient_constant: max(2),
    }
}
