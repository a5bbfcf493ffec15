//! Empirical bilinear constants, the contraction-exponent fit, and the
//! continuous-dependence check.

use serde::Serialize;

use super::{apply_system, iterate, state_distance, state_norm, Data, ParamSet, PicardOptions, State, System};
use crate::constraints::require_feasible;
use crate::error::{Error, Result};
use crate::random::{random_field_with, rng};
use crate::spectral::{dilate, GridSpec, SpectralField};

/// `‖S(ỹ) - ỹ‖_𝓔 / ‖ỹ‖²_𝓔` for the caloric extension `ỹ` of `(u0, b0)`.
pub(crate) fn bilinear_ratio(sys: &System, u0: Option<&SpectralField>, b0: &SpectralField, horizon: f64, m: usize) -> Result<f64> {
    let data = Data::checked(u0, b0)?;
    let y = data.caloric(sys, horizon, m)?;
    let n = state_norm(sys, &y);
    if n == 0.0 {
        return Ok(0.0);
    }
    let grid = b0.grid();
    let zero = Data { u0: data.u0.as_ref().map(|_| SpectralField::zeros(grid)), b0: SpectralField::zeros(grid) };
    let response = apply_system(sys, &y, &zero)?;
    Ok(state_norm(sys, &response) / (n * n))
}

/// Largest bilinear ratio over the given data.
pub fn empirical_c0(
    params: &ParamSet,
    horizon: f64,
    node_count: usize,
    corpus: &[(SpectralField, SpectralField)],
) -> Result<f64> {
    require_feasible(params)?;
    let sys = System::Full(*params);
    let mut best = 0.0f64;
    for (u0, b0) in corpus {
        best = best.max(bilinear_ratio(&sys, Some(u0), b0, horizon, node_count)?);
    }
    Ok(best)
}

/// Random corpus used to estimate `C₀(T)`.
///
/// Each random draw is a pair of unit-scale (band 1) solenoidal fields. The
/// corpus holds every integer dilate `f(px)` whose quadratic products stay
/// inside the dealiased band, in three variants: both fields, magnetic only,
/// velocity only. Dilates are the lattice's version of the parabolic scaling,
/// so each horizon finds data near its own scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionSpec {
    pub grid: GridSpec,
    pub node_count: usize,
    /// Number of random unit-scale draws.
    pub corpus_size: usize,
    pub seed: u64,
    /// When false the magnetic data are zero.
    pub magnetic: bool,
}

/// One corpus member and the wavenumber magnitude it reaches.
#[derive(Debug, Clone)]
pub struct CorpusMember {
    pub u0: SpectralField,
    pub b0: SpectralField,
    pub dilation: usize,
    pub max_wavenumber: f64,
}

impl ContractionSpec {
    pub fn new(grid: GridSpec, node_count: usize, corpus_size: usize) -> Self {
        ContractionSpec { grid, node_count, corpus_size, seed: 0, magnetic: true }
    }

    pub fn max_dilation(&self) -> usize {
        (self.grid.dealias_cutoff() / 2).max(1) as usize
    }

    pub fn corpus(&self) -> Result<Vec<CorpusMember>> {
        let mut r = rng(self.seed);
        let zero = SpectralField::zeros(self.grid);
        let mut out = Vec::new();
        for _ in 0..self.corpus_size {
            let ub = random_field_with(self.grid, 1, &mut r, true, |_| 1.0);
            let bb = random_field_with(self.grid, 1, &mut r, true, |_| 1.0);
            for p in 1..=self.max_dilation() {
                let u0 = dilate(&ub, p)?;
                let b0 = dilate(&bb, p)?;
                let max_wavenumber = 3f64.sqrt() * p as f64;
                let mut push = |u0: &SpectralField, b0: &SpectralField| {
                    out.push(CorpusMember { u0: u0.clone(), b0: b0.clone(), dilation: p, max_wavenumber })
                };
                push(&u0, &zero);
                if self.magnetic {
                    push(&u0, &b0);
                    push(&zero, &b0);
                }
            }
        }
        Ok(out)
    }
}

/// A member is resolved at horizon `T` when its fastest caloric mode decays by
/// at most `e^{-1}` over one node spacing; the node-sampled norms of faster
/// modes miss their peak and inflate the ratio.
fn resolved(params: &ParamSet, member: &CorpusMember, horizon: f64, node_count: usize) -> bool {
    let h = horizon / node_count as f64;
    let k2 = member.max_wavenumber * member.max_wavenumber;
    let rate = (params.nu * k2.powf(params.alpha1)).max(params.mu * k2.powf(params.alpha2));
    h * rate <= 1.0
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub horizons: Vec<f64>,
    pub c0_estimates: Vec<f64>,
    /// Slope of `log C₀` against `log T`.
    pub fitted_a: f64,
    pub analytic_a: f64,
    pub exponents: [f64; 4],
    /// Whether `C₀(T)` is nondecreasing on the tested horizons.
    pub monotone: bool,
}

/// Least-squares slope and intercept of `y` on `x`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Measures `C₀(T)` on a random corpus for each horizon and fits `C₀ ∝ T^a`.
pub fn contraction_estimate(params: &ParamSet, horizons: &[f64], spec: &ContractionSpec) -> Result<ContractionReport> {
    let report = require_feasible(params)?;
    if horizons.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 horizons, got {}", horizons.len())));
    }
    let (lo, hi) = horizons.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &t| (l.min(t), h.max(t)));
    if !(lo > 0.0) || hi / lo < 10.0 {
        return Err(Error::InvalidArgument("horizons must be positive and span a decade".into()));
    }
    let corpus = spec.corpus()?;
    let sys = System::Full(*params);
    let mut c0 = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let mut best = 0.0f64;
        let mut used = 0;
        for member in corpus.iter().filter(|m| resolved(params, m, t, spec.node_count)) {
            best = best.max(bilinear_ratio(&sys, Some(&member.u0), &member.b0, t, spec.node_count)?);
            used += 1;
        }
        if used == 0 {
            return Err(Error::InvalidArgument(format!("no corpus member is resolved at T = {t}")));
        }
        log::info!("C0({t}) = {best:.6e} over {used} members");
        c0.push(best);
    }
    let lx: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = c0.iter().map(|c| c.ln()).collect();
    let (fitted_a, _) = linear_fit(&lx, &ly);
    let mut order: Vec<usize> = (0..horizons.len()).collect();
    order.sort_by(|&a, &b| horizons[a].total_cmp(&horizons[b]));
    let monotone = order.windows(2).all(|w| c0[w[1]] >= c0[w[0]]);
    Ok(ContractionReport {
        horizons: horizons.to_vec(),
        c0_estimates: c0,
        fitted_a,
        analytic_a: report.analytic_a,
        exponents: report.exponents,
        monotone,
    })
}

/// Controls of [`continuous_dependence_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DependenceSpec {
    pub horizon: f64,
    pub node_count: usize,
    pub tolerance: f64,
    pub max_iter: usize,
    /// Empirical bilinear constant `C₀` at this horizon.
    pub c0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DependenceReport {
    pub solution_difference: f64,
    pub data_difference: f64,
    /// `solution_difference / data_difference`, or 0 when the data agree.
    pub ratio: f64,
    /// The larger caloric-extension norm.
    pub epsilon: f64,
    pub c0: f64,
    /// `1 / (1 - 4 ε C₀)`, infinite when `4 ε C₀ >= 1`.
    pub bound: f64,
    pub within_bound: bool,
}

/// Solves from two data pairs and compares the solution gap with the caloric gap.
pub fn continuous_dependence_check(
    first: (&SpectralField, &SpectralField),
    second: (&SpectralField, &SpectralField),
    params: &ParamSet,
    spec: &DependenceSpec,
) -> Result<DependenceReport> {
    require_feasible(params)?;
    let sys = System::Full(*params);
    let opts = PicardOptions::new(spec.horizon, spec.node_count, spec.tolerance, spec.max_iter)?;
    let solve = |u0: &SpectralField, b0: &SpectralField| -> Result<(State, State, f64)> {
        let data = Data::checked(Some(u0), b0)?;
        let cal = data.caloric(&sys, spec.horizon, spec.node_count)?;
        let (sol, report) = iterate(&sys, &data, &opts, &mut |_| {})?;
        report.require_converged()?;
        Ok((sol, cal, report.caloric_norm))
    };
    let (s1, c1, e1) = solve(first.0, first.1)?;
    let (s2, c2, e2) = solve(second.0, second.1)?;
    let solution_difference = state_distance(&sys, &s1, &s2)?;
    let data_difference = state_distance(&sys, &c1, &c2)?;
    let ratio = if data_difference == 0.0 { 0.0 } else { solution_difference / data_difference };
    let epsilon = e1.max(e2);
    let q = 4.0 * epsilon * spec.c0;
    let bound = if q < 1.0 { 1.0 / (1.0 - q) } else { f64::INFINITY };
    Ok(DependenceReport {
        solution_difference,
        data_difference,
        ratio,
        epsilon,
        c0: spec.c0,
        bound,
        within_bound: ratio <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::taylor_green_pair;

    #[test]
    fn fit_recovers_a_power_law() {
        let x: Vec<f64> = [0.1f64, 0.2, 0.4, 0.8].iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = x.iter().map(|l| 0.3 * l + 1.5).collect();
        let (s, c) = linear_fit(&x, &y);
        assert!((s - 0.3).abs() < 1e-14 && (c - 1.5).abs() < 1e-14);
    }

    #[test]
    fn ratio_is_scale_free() {
        let g = GridSpec::new(8).unwrap();
        let sys = System::Full(ParamSet::reference());
        let (u, b) = taylor_green_pair(g, 1.0);
        let r1 = bilinear_ratio(&sys, Some(&u), &b, 0.3, 8).unwrap();
        let r2 = bilinear_ratio(&sys, Some(&u.scaled(1e-3)), &b.scaled(1e-3), 0.3, 8).unwrap();
        assert!((r1 - r2).abs() < 1e-12 * r1);
        assert!(r1 > 0.0);
    }

    #[test]
    fn electron_ratio_is_dilation_invariant() {
        // with β = 2 the electron map is exactly scale invariant: b(2x) on T/8
        // reproduces b on T node for node
        // (the sup of the dilated field on N = 16 only sees the even points, so
        // the undilated run lives on N = 8)
        let coarse = GridSpec::new(8).unwrap();
        let fine = GridSpec::new(16).unwrap();
        let sys = System::Electron { alpha2: 1.5, mu: 1.0, eta: 1.0 };
        let b = crate::random::random_field(fine, 1, 3, true);
        let mut b8 = SpectralField::zeros(coarse);
        for k2 in -1..=1 {
            for k1 in -1..=1 {
                for k0 in -1..=1 {
                    b8.set_mode_pair([k0, k1, k2], b.mode([k0, k1, k2]));
                }
            }
        }
        let b8 = b8.with_solenoidal_flag(true);
        let r1 = bilinear_ratio(&sys, None, &b8, 0.4, 8).unwrap();
        let r2 = bilinear_ratio(&sys, None, &dilate(&b, 2).unwrap(), 0.05, 8).unwrap();
        assert!(r1 > 0.0);
        assert!((r1 - r2).abs() < 1e-10 * r1, "{r1} {r2}");
    }

    #[test]
    fn corpus_layout() {
        let g = GridSpec::new(32).unwrap();
        let mut spec = ContractionSpec::new(g, 16, 2);
        assert_eq!(spec.max_dilation(), 5);
        let c = spec.corpus().unwrap();
        assert_eq!(c.len(), 2 * 5 * 3);
        assert!(c.iter().all(|m| m.b0.band_extent(0.0) <= 5 && m.u0.band_extent(0.0) as usize <= m.dilation));
        spec.magnetic = false;
        let c = spec.corpus().unwrap();
        assert_eq!(c.len(), 10);
        assert!(c.iter().all(|m| m.b0.max_abs_coefficient() == 0.0));
    }

    #[test]
    fn unresolved_members_are_skipped() {
        let p = ParamSet::reference();
        let g = GridSpec::new(32).unwrap();
        let c = ContractionSpec::new(g, 32, 1).corpus().unwrap();
        let fine = c.iter().filter(|m| resolved(&p, m, 0.05, 32)).count();
        let coarse = c.iter().filter(|m| resolved(&p, m, 0.8, 32)).count();
        assert!(coarse < fine && coarse > 0);
    }

    #[test]
    fn estimate_needs_a_decade_of_horizons() {
        let spec = ContractionSpec::new(GridSpec::new(8).unwrap(), 8, 2);
        let p = ParamSet::reference();
        assert!(contraction_estimate(&p, &[0.1, 0.2, 0.4], &spec).is_err());
        assert!(contraction_estimate(&p, &[0.1, 0.2, 0.4, 0.8], &spec).is_err());
    }

    #[test]
    fn identical_data_report_zero_difference() {
        let g = GridSpec::new(8).unwrap();
        let (u, b) = taylor_green_pair(g, 1e-2);
        let spec = DependenceSpec { horizon: 0.3, node_count: 8, tolerance: 1e-12, max_iter: 30, c0: 1.0 };
        let r = continuous_dependence_check((&u, &b), (&u, &b), &ParamSet::reference(), &spec).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert_eq!(r.solution_difference, 0.0);
        assert!(r.within_bound);
    }
}
