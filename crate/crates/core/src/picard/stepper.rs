//! Integrating-factor Heun scheme on the spectral system, used as an
//! independent check on the Picard iterates.

use super::{instant_sources, Data, ParamSet, State, System};
use crate::constraints::require_feasible;
use crate::duhamel::Trajectory;
use crate::error::{Error, Result};
use crate::semigroup::{decay_table, PropagatorSpec};
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperOptions {
    /// When false the quadratic terms are dropped and only the linear flow remains.
    pub nonlinear: bool,
    /// Abort when the largest coefficient grows by more than this factor.
    pub growth_limit: f64,
}

impl Default for StepperOptions {
    fn default() -> Self {
        StepperOptions { nonlinear: true, growth_limit: 1e6 }
    }
}

/// Integrates the full system with `n_steps` steps on `[0, T]`, returning the
/// solution at the `M + 1` Picard nodes. `n_steps` must be a multiple of `M`.
pub fn direct_stepper(
    u0: &SpectralField,
    b0: &SpectralField,
    params: &ParamSet,
    horizon: f64,
    node_count: usize,
    n_steps: usize,
) -> Result<(Trajectory, Trajectory)> {
    direct_stepper_with(u0, b0, params, horizon, node_count, n_steps, &StepperOptions::default())
}

pub fn direct_stepper_with(
    u0: &SpectralField,
    b0: &SpectralField,
    params: &ParamSet,
    horizon: f64,
    node_count: usize,
    n_steps: usize,
    opts: &StepperOptions,
) -> Result<(Trajectory, Trajectory)> {
    require_feasible(params)?;
    let data = Data::checked(Some(u0), b0)?;
    let s = integrate(&System::Full(*params), &data, horizon, node_count, n_steps, opts)?;
    Ok((s.u.expect("full system keeps u"), s.b))
}

struct Linear {
    u: Option<Vec<f64>>,
    b: Vec<f64>,
}

pub(crate) fn integrate(
    sys: &System,
    data: &Data,
    horizon: f64,
    node_count: usize,
    n_steps: usize,
    opts: &StepperOptions,
) -> Result<State> {
    if node_count == 0 || n_steps == 0 || !n_steps.is_multiple_of(node_count) {
        return Err(Error::InvalidArgument(format!(
            "step count {n_steps} must be a positive multiple of the node count {node_count}"
        )));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    let grid = data.b0.grid();
    let dt = horizon / n_steps as f64;
    let (a2, mu) = sys.magnetic();
    let lin = Linear {
        u: match sys {
            System::Full(p) => Some(decay_table(grid, &PropagatorSpec::new(p.alpha1, p.nu, dt)?)),
            System::Electron { .. } => None,
        },
        b: decay_table(grid, &PropagatorSpec::new(a2, mu, dt)?),
    };
    let zero = SpectralField::zeros(grid);
    let mut u = lin.u.as_ref().map(|_| data.u0.clone().unwrap_or_else(|| zero.clone()));
    let mut b = data.b0.clone();
    let size = |u: &Option<SpectralField>, b: &SpectralField| {
        u.as_ref().map_or(0.0, |f| f.max_abs_coefficient()).max(b.max_abs_coefficient())
    };
    let initial = size(&u, &b);
    let every = n_steps / node_count;
    let mut out_u = vec![];
    let mut out_b = vec![b.clone()];
    if let Some(u) = &u {
        out_u.push(u.clone());
    }

    for step in 1..=n_steps {
        if opts.nonlinear {
            heun_step(sys, &lin, &mut u, &mut b, dt);
        } else {
            if let (Some(u), Some(e)) = (u.as_mut(), lin.u.as_ref()) {
                u.multiply_modes(e);
            }
            b.multiply_modes(&lin.b);
        }
        if step % every == 0 {
            let now = size(&u, &b);
            let growth = if initial > 0.0 { now / initial } else { 0.0 };
            if !now.is_finite() || growth > opts.growth_limit {
                return Err(Error::Unstable { time: step as f64 * dt, growth });
            }
            out_b.push(b.clone());
            if let Some(u) = &u {
                out_u.push(u.clone());
            }
        }
    }
    let u = if lin.u.is_some() { Some(Trajectory::new(horizon, out_u)?) } else { None };
    Ok(State { u, b: Trajectory::new(horizon, out_b)? })
}

/// Predictor `x* = E(xⁿ + dt N(xⁿ))`, corrector `xⁿ⁺¹ = E xⁿ + dt/2 (E N(xⁿ) + N(x*))`.
fn heun_step(sys: &System, lin: &Linear, u: &mut Option<SpectralField>, b: &mut SpectralField, dt: f64) {
    let (fu0, fb0) = instant_sources(sys, u.as_ref(), b);

    let mut bs = b.clone();
    bs.axpy(dt, &fb0);
    bs.multiply_modes(&lin.b);
    let us = match (u.as_ref(), fu0.as_ref(), lin.u.as_ref()) {
        (Some(u), Some(f), Some(e)) => {
            let mut x = u.clone();
            x.axpy(dt, f);
            x.multiply_modes(e);
            Some(x)
        }
        _ => None,
    };
    let (fu1, fb1) = instant_sources(sys, us.as_ref(), &bs);

    let advance = |x: &mut SpectralField, f0: &SpectralField, f1: &SpectralField, e: &[f64]| {
        x.axpy(0.5 * dt, f0);
        x.multiply_modes(e);
        x.axpy(0.5 * dt, f1);
    };
    advance(b, &fb0, &fb1, &lin.b);
    if let (Some(u), Some(f0), Some(f1), Some(e)) = (u.as_mut(), fu0.as_ref(), fu1.as_ref(), lin.u.as_ref()) {
        advance(u, f0, f1, e);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, taylor_green_pair};
    use crate::spectral::GridSpec;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    #[test]
    fn zero_data_stay_zero() {
        let g = grid(8);
        let z = SpectralField::zeros(g);
        let (u, b) = direct_stepper(&z, &z, &ParamSet::reference(), 0.5, 8, 32).unwrap();
        assert_eq!(u.node(8).max_abs_coefficient(), 0.0);
        assert_eq!(b.node(8).max_abs_coefficient(), 0.0);
    }

    #[test]
    fn linear_flow_is_exact() {
        let g = grid(16);
        let p = ParamSet::reference();
        let u0 = random_field(g, 5, 1, true);
        let b0 = random_field(g, 5, 2, true);
        let opts = StepperOptions { nonlinear: false, ..Default::default() };
        let (u, b) = direct_stepper_with(&u0, &b0, &p, 0.5, 8, 64, &opts).unwrap();
        let cu = Trajectory::caloric(&u0, 0.5, 8, p.alpha1, p.nu).unwrap();
        let cb = Trajectory::caloric(&b0, 0.5, 8, p.alpha2, p.mu).unwrap();
        assert!(u.max_coeff_diff(&cu) < 1e-12);
        assert!(b.max_coeff_diff(&cb) < 1e-12);
    }

    #[test]
    fn heun_is_second_order() {
        let g = grid(8);
        let p = ParamSet::reference();
        let (u0, b0) = taylor_green_pair(g, 1.0);
        let run = |n: usize| direct_stepper(&u0, &b0, &p, 0.4, 4, n).unwrap();
        let (ur, br) = run(512);
        let err = |n: usize| {
            let (u, b) = run(n);
            u.node(4).max_coeff_diff(ur.node(4)).max(b.node(4).max_coeff_diff(br.node(4)))
        };
        let ratio = err(16) / err(32);
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn step_count_must_divide() {
        let g = grid(8);
        let z = SpectralField::zeros(g);
        assert!(direct_stepper(&z, &z, &ParamSet::reference(), 0.5, 8, 30).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let g = grid(8);
        let (u0, b0) = taylor_green_pair(g, 1e3);
        let opts = StepperOptions { growth_limit: 1e6, ..Default::default() };
        let r = direct_stepper_with(&u0, &b0, &ParamSet::reference(), 1.0, 8, 8, &opts);
        assert!(matches!(r, Err(Error::Unstable { .. })), "{r:?}");
    }
}
