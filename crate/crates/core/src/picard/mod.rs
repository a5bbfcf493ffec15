//! The mild-solution map `S`, the time-weighted path norms, and the Picard
//! fixed-point solver built on them.

mod contraction;
mod stepper;

use rayon::prelude::*;
use serde::Serialize;

pub use crate::constraints::ParamSet;
pub use crate::duhamel::Trajectory;
pub use contraction::{
    continuous_dependence_check, contraction_estimate, empirical_c0, ContractionReport, ContractionSpec, CorpusMember,
    DependenceReport, DependenceSpec,
};
pub use stepper::{direct_stepper, direct_stepper_with, StepperOptions};
pub(crate) use contraction::bilinear_ratio;
pub(crate) use stepper::integrate;

use crate::constraints::require_feasible;
use crate::duhamel::{hall_source, mhd_sources, DuhamelAccumulator, QuadratureSpec};
use crate::error::{Error, Result};
use crate::semigroup::heat_propagate;
use crate::spectral::SpectralField;

/// Weights of the admissible path space `X_T × Y_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathNormSpec {
    pub weight_u: f64,
    pub weight_b: f64,
    pub horizon: f64,
}

impl PathNormSpec {
    pub fn new(params: &ParamSet, horizon: f64) -> Self {
        PathNormSpec { weight_u: params.weight_u(), weight_b: params.weight_b(), horizon }
    }
}

/// `max_{m>=1} s_m^w ‖f(s_m)‖_∞`.
pub fn weighted_sup(traj: &Trajectory, w: f64) -> f64 {
    weighted_sup_of(traj, &traj.sup_norms(), w)
}

fn weighted_sup_of(traj: &Trajectory, sups: &[f64], w: f64) -> f64 {
    sups.iter().enumerate().skip(1).map(|(m, s)| traj.time(m).powf(w) * s).fold(0.0, f64::max)
}

fn check_weight(w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::InvalidArgument(format!("path-norm weight {w} must be positive")));
    }
    Ok(w)
}

/// `sup_t t^{(2α₁-γ)/(2α₁)} ‖u(t)‖_∞` over the nodes.
pub fn path_norm_x(u: &Trajectory, alpha1: f64, gamma: f64) -> Result<f64> {
    let w = check_weight((2.0 * alpha1 - gamma) / (2.0 * alpha1))?;
    Ok(weighted_sup(u, w))
}

/// `sup_t t^{(2α₂-β)/(2α₂)} ‖b(t)‖_∞` over the nodes.
pub fn path_norm_y(b: &Trajectory, alpha2: f64, beta: f64) -> Result<f64> {
    let w = check_weight((2.0 * alpha2 - beta) / (2.0 * alpha2))?;
    Ok(weighted_sup(b, w))
}

/// Which map is iterated: the full system, or its `u ≡ 0` electron limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum System {
    Full(ParamSet),
    Electron { alpha2: f64, mu: f64, eta: f64 },
}

impl System {
    fn weight_u(&self) -> f64 {
        match self {
            System::Full(p) => p.weight_u(),
            System::Electron { .. } => 0.0,
        }
    }

    fn weight_b(&self) -> f64 {
        match self {
            System::Full(p) => p.weight_b(),
            // β = 2
            System::Electron { alpha2, .. } => (alpha2 - 1.0) / alpha2,
        }
    }

    fn magnetic(&self) -> (f64, f64) {
        match *self {
            System::Full(p) => (p.alpha2, p.mu),
            System::Electron { alpha2, mu, .. } => (alpha2, mu),
        }
    }
}

/// A pair of trajectories; `u` is absent for the electron system.
#[derive(Debug, Clone)]
pub(crate) struct State {
    pub u: Option<Trajectory>,
    pub b: Trajectory,
}

impl State {
    fn difference(&self, other: &State) -> Result<State> {
        let u = match (&self.u, &other.u) {
            (Some(a), Some(b)) => Some(a.difference(b)?),
            _ => None,
        };
        Ok(State { u, b: self.b.difference(&other.b)? })
    }
}

/// `(‖u‖_X, ‖b‖_Y)` of a state.
pub(crate) fn state_norms(sys: &System, s: &State) -> (f64, f64) {
    let nu = s.u.as_ref().map_or(0.0, |u| weighted_sup(u, sys.weight_u()));
    (nu, weighted_sup(&s.b, sys.weight_b()))
}

pub(crate) fn state_norm(sys: &System, s: &State) -> f64 {
    let (a, b) = state_norms(sys, s);
    a + b
}

pub(crate) fn state_distance(sys: &System, a: &State, b: &State) -> Result<f64> {
    Ok(state_norm(sys, &a.difference(b)?))
}

/// Initial data of a run.
#[derive(Debug, Clone)]
pub(crate) struct Data {
    pub u0: Option<SpectralField>,
    pub b0: SpectralField,
}

impl Data {
    pub fn checked(u0: Option<&SpectralField>, b0: &SpectralField) -> Result<Data> {
        let prep = |f: &SpectralField| -> Result<SpectralField> {
            f.check_solenoidal()?;
            f.check_mean_zero()?;
            Ok(f.clone().with_solenoidal_flag(true))
        };
        if let Some(u) = u0 {
            u.ensure_same_grid(b0)?;
        }
        Ok(Data { u0: u0.map(prep).transpose()?, b0: prep(b0)? })
    }

    pub fn caloric(&self, sys: &System, horizon: f64, m: usize) -> Result<State> {
        let (a2, mu) = sys.magnetic();
        let u = match (sys, &self.u0) {
            (System::Full(p), Some(u0)) => Some(Trajectory::caloric(u0, horizon, m, p.alpha1, p.nu)?),
            _ => None,
        };
        Ok(State { u, b: Trajectory::caloric(&self.b0, horizon, m, a2, mu)? })
    }
}

/// Projected right-hand sides `(F_u, F_b)` at one instant.
pub(crate) fn instant_sources(
    sys: &System,
    u: Option<&SpectralField>,
    b: &SpectralField,
) -> (Option<SpectralField>, SpectralField) {
    match (sys, u) {
        (System::Full(p), Some(u)) => {
            let (fu, fb) = mhd_sources(u, b, p.eta);
            (Some(fu), fb)
        }
        (System::Full(p), None) => {
            let (_, fb) = mhd_sources(&SpectralField::zeros(b.grid()), b, p.eta);
            (None, fb)
        }
        (System::Electron { eta, .. }, _) => (None, hall_source(b, *eta)),
    }
}

/// One application of the Duhamel map to a state.
pub(crate) fn apply_system(sys: &System, s: &State, data: &Data) -> Result<State> {
    let b = &s.b;
    let grid = b.grid();
    let m_count = b.node_count();
    let h = b.step();
    let horizon = b.horizon();
    data.b0.ensure_same_grid(b.node(0))?;
    let (a2, mu) = sys.magnetic();
    let mut acc_b = DuhamelAccumulator::new(grid, a2, mu, h)?;
    let mut acc_u = match sys {
        System::Full(p) => {
            let u = s.u.as_ref().ok_or_else(|| Error::TrajectoryMismatch("missing velocity path".into()))?;
            u.check_compatible(b)?;
            Some(DuhamelAccumulator::new(grid, p.alpha1, p.nu, h)?)
        }
        System::Electron { .. } => None,
    };
    let zero = SpectralField::zeros(grid);
    let u0 = data.u0.as_ref().unwrap_or(&zero);

    let sources = |m: usize| instant_sources(sys, s.u.as_ref().map(|u| u.node(m)), b.node(m));

    let mut out_u = Vec::with_capacity(m_count + 1);
    let mut out_b = Vec::with_capacity(m_count + 1);
    let chunk = 2 * rayon::current_num_threads().max(1);
    let mut start = 0;
    while start <= m_count {
        let end = (start + chunk).min(m_count + 1);
        let batch: Vec<_> = (start..end).into_par_iter().map(&sources).collect();
        for (k, (fu, fb)) in batch.into_iter().enumerate() {
            let t = (start + k) as f64 * h;
            let mut nb = heat_propagate(&data.b0, t, a2, mu)?;
            nb.axpy(1.0, &acc_b.push(&fb));
            out_b.push(nb);
            if let (Some(acc), Some(fu), System::Full(p)) = (acc_u.as_mut(), fu, sys) {
                let mut nu = heat_propagate(u0, t, p.alpha1, p.nu)?;
                nu.axpy(1.0, &acc.push(&fu));
                out_u.push(nu);
            }
        }
        start = end;
    }
    let u = if acc_u.is_some() { Some(Trajectory::new(horizon, out_u)?) } else { None };
    Ok(State { u, b: Trajectory::new(horizon, out_b)? })
}

/// `(S₁(u,b), S₂(u,b))`: caloric extensions of the data plus the Duhamel terms.
pub fn apply_s(
    u: &Trajectory,
    b: &Trajectory,
    u0: &SpectralField,
    b0: &SpectralField,
    params: &ParamSet,
) -> Result<(Trajectory, Trajectory)> {
    require_feasible(params)?;
    u.check_compatible(b)?;
    let data = Data::checked(Some(u0), b0)?;
    let sys = System::Full(*params);
    let out = apply_system(&sys, &State { u: Some(u.clone()), b: b.clone() }, &data)?;
    Ok((out.u.expect("full system keeps u"), out.b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PicardStatus {
    Converged,
    /// Three consecutive non-contracting iterations.
    Diverged,
    MaxIterations,
}

/// One Picard iteration, as streamed to observers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `‖x_{n} - x_{n-1}‖` in the path norm.
    pub increment: f64,
    /// `increment / previous increment`; absent on the first iteration.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    pub status: PicardStatus,
    pub converged: bool,
    pub iterate_count: usize,
    pub increments: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    /// `‖x - S(x)‖` for the returned iterate, from one extra application of `S`.
    pub final_residual: f64,
    /// `(‖u‖_X, ‖b‖_Y)` of the returned iterate.
    pub path_norms: (f64, f64),
    pub horizon: f64,
    pub node_count: usize,
    pub tolerance: f64,
    /// `ε`: path norm of the caloric extension of the data.
    pub caloric_norm: f64,
    /// `‖S(ỹ) - ỹ‖ / ‖ỹ‖²` at the first iterate, a lower bound on `C₀`.
    pub observed_c0: f64,
    /// True when `4 ε C₀ >= 1` with the observed `C₀`: the data are too large for this `T`.
    pub data_too_large: bool,
}

impl PicardReport {
    pub fn summary(&self) -> String {
        match self.status {
            PicardStatus::Converged => {
                format!("converged after {} iterations, residual {:.3e}", self.iterate_count, self.final_residual)
            }
            PicardStatus::Diverged if self.data_too_large => format!(
                "diverged: data too large for T = {} (4 eps C0 = {:.3})",
                self.horizon,
                4.0 * self.caloric_norm * self.observed_c0
            ),
            PicardStatus::Diverged => format!("diverged after {} iterations", self.iterate_count),
            PicardStatus::MaxIterations => format!(
                "no convergence in {} iterations, last increment {:.3e}",
                self.iterate_count,
                self.increments.last().copied().unwrap_or(f64::NAN)
            ),
        }
    }

    /// `Err(NotConverged)` unless the run converged.
    pub fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged(self.summary()))
        }
    }
}

/// Run controls of a Picard solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicardOptions {
    pub horizon: f64,
    pub node_count: usize,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl PicardOptions {
    pub fn new(horizon: f64, node_count: usize, tolerance: f64, max_iter: usize) -> Result<Self> {
        QuadratureSpec::new(node_count)?;
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {tolerance} must be positive")));
        }
        if max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(PicardOptions { horizon, node_count, tolerance, max_iter })
    }
}

/// Picard iterates with their report.
#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub u: Trajectory,
    pub b: Trajectory,
    pub report: PicardReport,
}

const DIVERGENCE_RUN: usize = 3;

/// Iterates `x ← S(x)` from the caloric extension.
pub(crate) fn iterate(
    sys: &System,
    data: &Data,
    opts: &PicardOptions,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<(State, PicardReport)> {
    let start = data.caloric(sys, opts.horizon, opts.node_count)?;
    let caloric_norm = state_norm(sys, &start);
    let mut current = start;
    let mut increments: Vec<f64> = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    let mut status = PicardStatus::MaxIterations;
    let mut observed_c0 = 0.0;
    for it in 1..=opts.max_iter {
        let next = apply_system(sys, &current, data)?;
        let inc = state_distance(sys, &next, &current)?;
        if it == 1 && caloric_norm > 0.0 {
            observed_c0 = inc / (caloric_norm * caloric_norm);
        }
        let ratio = increments.last().map(|&p| if p > 0.0 { inc / p } else { f64::INFINITY });
        if let Some(r) = ratio {
            ratios.push(r);
        }
        increments.push(inc);
        observer(&IterationRecord { iteration: it, increment: inc, ratio });
        log::debug!("picard iteration {it}: increment {inc:.3e}");
        current = next;
        if inc <= opts.tolerance {
            status = PicardStatus::Converged;
            break;
        }
        let stalled = ratios.len() >= DIVERGENCE_RUN && ratios[ratios.len() - DIVERGENCE_RUN..].iter().all(|&r| r >= 1.0);
        if !inc.is_finite() || stalled {
            status = PicardStatus::Diverged;
            break;
        }
    }
    let final_residual = if inc_is_finite(&increments) {
        state_distance(sys, &apply_system(sys, &current, data)?, &current)?
    } else {
        f64::INFINITY
    };
    let report = PicardReport {
        status,
        converged: status == PicardStatus::Converged,
        iterate_count: increments.len(),
        increments,
        contraction_ratios: ratios,
        final_residual,
        path_norms: state_norms(sys, &current),
        horizon: opts.horizon,
        node_count: opts.node_count,
        tolerance: opts.tolerance,
        caloric_norm,
        observed_c0,
        data_too_large: 4.0 * caloric_norm * observed_c0 >= 1.0,
    };
    Ok((current, report))
}

fn inc_is_finite(incs: &[f64]) -> bool {
    incs.last().is_none_or(|x| x.is_finite())
}

/// Solves the full system by Picard iteration from `(ũ₀, b̃₀)`.
pub fn picard_solve(
    u0: &SpectralField,
    b0: &SpectralField,
    params: &ParamSet,
    opts: &PicardOptions,
) -> Result<PicardSolution> {
    picard_solve_with(u0, b0, params, opts, &mut |_| {})
}

/// [`picard_solve`] reporting every iteration to `observer`.
pub fn picard_solve_with(
    u0: &SpectralField,
    b0: &SpectralField,
    params: &ParamSet,
    opts: &PicardOptions,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<PicardSolution> {
    require_feasible(params)?;
    let data = Data::checked(Some(u0), b0)?;
    let sys = System::Full(*params);
    let (state, report) = iterate(&sys, &data, opts, observer)?;
    Ok(PicardSolution { u: state.u.expect("full system keeps u"), b: state.b, report })
}
