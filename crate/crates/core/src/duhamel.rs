//! Nonlinear tensors of the system and the Duhamel bilinear forms, evaluated
//! by composite-trapezoid quadrature over trajectories sampled at uniform nodes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::semigroup::{decay_table, duhamel_kernel, heat_propagate, PropagatorSpec};
use crate::spectral::ops::{
    antisymmetric_tensor_divergence, cross_product, symmetric_tensor_divergence, tensor_divergence,
};
use crate::spectral::{curl, leray_project, GridSpec, SpectralField};

pub const DEFAULT_NODE_COUNT: usize = 64;
pub const MIN_NODE_COUNT: usize = 8;

/// A field path sampled at `s_m = mT/M`, `m = 0..=M`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: GridSpec,
    horizon: f64,
    nodes: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(horizon: f64, nodes: Vec<SpectralField>) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
        }
        if nodes.len() < 2 {
            return Err(Error::TrajectoryMismatch(format!("need at least 2 nodes, got {}", nodes.len())));
        }
        let grid = nodes[0].grid();
        for f in &nodes[1..] {
            nodes[0].ensure_same_grid(f)?;
        }
        Ok(Trajectory { grid, horizon, nodes })
    }

    pub fn zeros(grid: GridSpec, horizon: f64, m: usize) -> Result<Self> {
        Self::constant(&SpectralField::zeros(grid), horizon, m)
    }

    /// The same field at every node.
    pub fn constant(f: &SpectralField, horizon: f64, m: usize) -> Result<Self> {
        Self::new(horizon, vec![f.clone(); m + 1])
    }

    /// Caloric extension `e^{-κs(-Δ)^α} f₀` at every node.
    pub fn caloric(f0: &SpectralField, horizon: f64, m: usize, alpha: f64, kappa: f64) -> Result<Self> {
        let h = horizon / m as f64;
        let nodes = (0..=m)
            .into_par_iter()
            .map(|j| heat_propagate(f0, j as f64 * h, alpha, kappa))
            .collect::<Result<Vec<_>>>()?;
        Self::new(horizon, nodes)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `M`: the number of intervals. There are `M + 1` nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.node_count() as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.step()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes.len()).map(|m| self.time(m)).collect()
    }

    pub fn node(&self, m: usize) -> &SpectralField {
        &self.nodes[m]
    }

    pub fn nodes(&self) -> &[SpectralField] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<SpectralField> {
        self.nodes
    }

    pub fn scaled(&self, s: f64) -> Trajectory {
        Trajectory { grid: self.grid, horizon: self.horizon, nodes: self.nodes.iter().map(|f| f.scaled(s)).collect() }
    }

    /// Node-wise `self - other`.
    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_compatible(other)?;
        let nodes = self.nodes.iter().zip(&other.nodes).map(|(a, b)| a - b).collect();
        Ok(Trajectory { grid: self.grid, horizon: self.horizon, nodes })
    }

    pub fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch { left: self.grid.n(), right: other.grid.n() });
        }
        if self.nodes.len() != other.nodes.len() || (self.horizon - other.horizon).abs() > 1e-15 * self.horizon {
            return Err(Error::TrajectoryMismatch(format!(
                "(T = {}, M = {}) vs (T = {}, M = {})",
                self.horizon,
                self.node_count(),
                other.horizon,
                other.node_count()
            )));
        }
        Ok(())
    }

    /// Real-space sup norm at every node.
    pub fn sup_norms(&self) -> Vec<f64> {
        self.nodes.par_iter().map(|f| f.sup_norm()).collect()
    }

    /// Largest coefficient difference over all nodes.
    pub fn max_coeff_diff(&self, other: &Trajectory) -> f64 {
        self.nodes.iter().zip(&other.nodes).map(|(a, b)| a.max_coeff_diff(b)).fold(0.0, f64::max)
    }

    pub fn max_divergence_residual(&self) -> f64 {
        self.nodes.iter().map(|f| f.divergence_residual()).fold(0.0, f64::max)
    }
}

/// Composite trapezoid on the uniform node set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    node_count: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { node_count: DEFAULT_NODE_COUNT }
    }
}

impl QuadratureSpec {
    pub fn new(node_count: usize) -> Result<Self> {
        if node_count < MIN_NODE_COUNT {
            return Err(Error::InvalidArgument(format!("node count {node_count} below {MIN_NODE_COUNT}")));
        }
        Ok(QuadratureSpec { node_count })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Weights for `∫₀^{s_m}` on nodes `0..=m` with spacing `h`.
    pub fn weights(m: usize, h: f64) -> Vec<f64> {
        if m == 0 {
            return vec![0.0];
        }
        let mut w = vec![h; m + 1];
        w[0] = 0.5 * h;
        w[m] = 0.5 * h;
        w
    }
}

/// Streaming trapezoid for `I_m = ∫₀^{s_m} e^{-κ(s_m-s)(-Δ)^α} N(s) ds`.
///
/// With `E = e^{-κh|k|^{2α}}`, `R_m = E R_{m-1} + N_m` and `D_m = E D_{m-1}`,
/// `D_0 = N_0`, the integral is `h (R_m - D_m/2 - N_m/2)`.
pub struct DuhamelAccumulator {
    grid: GridSpec,
    decay: Vec<f64>,
    h: f64,
    running: Option<SpectralField>,
    first: Option<SpectralField>,
}

impl DuhamelAccumulator {
    pub fn new(grid: GridSpec, alpha: f64, kappa: f64, h: f64) -> Result<Self> {
        let spec = PropagatorSpec::new(alpha, kappa, h)?;
        let decay = decay_table(grid, &spec);
        Ok(DuhamelAccumulator { grid, decay, h, running: None, first: None })
    }

    /// Feeds `N_m` for the next node and returns `I_m`.
    pub fn push(&mut self, source: &SpectralField) -> SpectralField {
        debug_assert_eq!(source.grid(), self.grid);
        let (Some(running), Some(first)) = (self.running.as_mut(), self.first.as_mut()) else {
            self.running = Some(source.clone());
            self.first = Some(source.clone());
            return SpectralField::zeros(self.grid);
        };
        running.multiply_modes(&self.decay);
        running.axpy(1.0, source);
        first.multiply_modes(&self.decay);
        let mut out = running.clone();
        out.axpy(-0.5, first);
        out.axpy(-0.5, source);
        out.scale_mut(self.h);
        let flag = running.is_flagged_solenoidal() && first.is_flagged_solenoidal();
        out.with_solenoidal_flag(flag)
    }
}

/// `∇·(f⊗g)` with `(∇·(f⊗g))_i = Σ_j ∂_j(f_j g_i)`, from dealiased real-space products.
pub fn advection_divergence(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.ensure_same_grid(g)?;
    let ctx = f.grid().ctx();
    Ok(tensor_divergence(&ctx, &f.inverse_transform(), &g.inverse_transform()))
}

/// `∇×(∇·(b⊗b))`, dealiased.
pub fn hall_tensor(b: &SpectralField) -> Result<SpectralField> {
    b.check_solenoidal()?;
    let ctx = b.grid().ctx();
    Ok(curl(&symmetric_tensor_divergence(&ctx, &b.inverse_transform())))
}

/// Relative sup-norm gap between `∇×((∇×b)×b)` and `∇×(∇·(b⊗b))`.
///
/// Both sides are alias-free when `b` is band-limited to the dealias cutoff,
/// since every aliased product mode then lands outside the retained band.
pub fn hall_identity_check(b: &SpectralField) -> Result<f64> {
    b.check_solenoidal()?;
    let grid = b.grid();
    let ext = b.band_extent(1e-14 * b.max_abs_coefficient());
    if ext > grid.dealias_cutoff() {
        return Err(Error::BandLimit(format!("band {ext} exceeds the cutoff {}", grid.dealias_cutoff())));
    }
    let ctx = grid.ctx();
    let real = b.inverse_transform();
    let lorentz = cross_product(&ctx, &curl(b).inverse_transform(), &real);
    let lhs = curl(&lorentz);
    let rhs = curl(&symmetric_tensor_divergence(&ctx, &real));
    let scale = lhs.sup_norm().max(rhs.sup_norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((&lhs - &rhs).sup_norm() / scale)
}

/// Momentum and induction sources of the full system at one instant:
/// `F_u = ℙ(-∇·(u⊗u) + ∇·(b⊗b))`,
/// `F_b = -∇·(u⊗b - b⊗u) - η ∇×∇·(b⊗b)`, projected.
pub(crate) fn mhd_sources(u: &SpectralField, b: &SpectralField, eta: f64) -> (SpectralField, SpectralField) {
    let ctx = u.grid().ctx();
    let ur = u.inverse_transform();
    let br = b.inverse_transform();
    let dbb = symmetric_tensor_divergence(&ctx, &br);
    let mut fu = symmetric_tensor_divergence(&ctx, &ur);
    fu.scale_mut(-1.0);
    fu.axpy(1.0, &dbb);
    let mut fb = antisymmetric_tensor_divergence(&ctx, &ur, &br);
    fb.scale_mut(-1.0);
    if eta != 0.0 {
        fb.axpy(-eta, &curl(&dbb));
    }
    (leray_project(&fu), leray_project(&fb))
}

/// `-η ∇×∇·(b⊗b)`: the only source left when `u ≡ 0`.
pub(crate) fn hall_source(b: &SpectralField, eta: f64) -> SpectralField {
    if eta == 0.0 {
        return SpectralField::zeros(b.grid());
    }
    let ctx = b.grid().ctx();
    let mut out = curl(&symmetric_tensor_divergence(&ctx, &b.inverse_transform()));
    out.scale_mut(-eta);
    out
}

fn check_node(f: &Trajectory, g: &Trajectory, t_node: usize) -> Result<()> {
    f.check_compatible(g)?;
    if t_node > f.node_count() {
        return Err(Error::TrajectoryMismatch(format!("node {t_node} beyond M = {}", f.node_count())));
    }
    Ok(())
}

/// Sums `Σ_j w_j K(t_m - s_j) term(j)` in ascending `s` order.
fn quadrature_sum(
    traj: &Trajectory,
    t_node: usize,
    term: impl Fn(usize, f64) -> Result<SpectralField> + Sync,
) -> Result<SpectralField> {
    let h = traj.step();
    let w = QuadratureSpec::weights(t_node, h);
    let terms = (0..=t_node)
        .into_par_iter()
        .filter(|&j| w[j] != 0.0)
        .map(|j| term(j, (t_node - j) as f64 * h).map(|f| f.scaled(w[j])))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = SpectralField::zeros(traj.grid());
    for t in &terms {
        acc.axpy(1.0, t);
    }
    acc.set_solenoidal(true);
    Ok(acc)
}

/// `∫₀^{t} e^{-κ(t-s)(-Δ)^α} ℙ∇·(f⊗g)(s) ds` at node `t_node`, summed term by term.
pub fn bilinear_b(alpha: f64, kappa: f64, f: &Trajectory, g: &Trajectory, t_node: usize) -> Result<SpectralField> {
    check_node(f, g, t_node)?;
    quadrature_sum(f, t_node, |j, tau| {
        let d = advection_divergence(f.node(j), g.node(j))?;
        duhamel_kernel(&d, tau, alpha, kappa, false)
    })
}

/// `η ∫₀^{t} e^{-μ(t-s)(-Δ)^{α₂}} ∇×∇·(b⊗b)(s) ds` at node `t_node`.
pub fn hall_b(alpha2: f64, mu: f64, eta: f64, b: &Trajectory, t_node: usize) -> Result<SpectralField> {
    check_node(b, b, t_node)?;
    if !(eta >= 0.0) {
        return Err(Error::InvalidArgument(format!("eta = {eta} must be nonnegative")));
    }
    for f in b.nodes() {
        f.check_solenoidal()?;
    }
    if eta == 0.0 {
        return Ok(SpectralField::zeros(b.grid()));
    }
    quadrature_sum(b, t_node, |j, tau| {
        let ctx = b.grid().ctx();
        let d = symmetric_tensor_divergence(&ctx, &b.node(j).inverse_transform());
        Ok(duhamel_kernel(&d, tau, alpha2, mu, true)?.scaled(eta))
    })
}

/// [`bilinear_b`] at every node at once, through the streaming recursion.
pub fn bilinear_b_path(alpha: f64, kappa: f64, f: &Trajectory, g: &Trajectory) -> Result<Trajectory> {
    f.check_compatible(g)?;
    let mut acc = DuhamelAccumulator::new(f.grid(), alpha, kappa, f.step())?;
    let mut out = Vec::with_capacity(f.nodes.len());
    for (a, b) in f.nodes().iter().zip(g.nodes()) {
        out.push(acc.push(&leray_project(&advection_divergence(a, b)?)));
    }
    Trajectory::new(f.horizon(), out)
}

/// [`hall_b`] at every node at once, through the streaming recursion.
pub fn hall_b_path(alpha2: f64, mu: f64, eta: f64, b: &Trajectory) -> Result<Trajectory> {
    for f in b.nodes() {
        f.check_solenoidal()?;
    }
    let mut acc = DuhamelAccumulator::new(b.grid(), alpha2, mu, b.step())?;
    let mut out = Vec::with_capacity(b.nodes.len());
    for f in b.nodes() {
        // hall_source carries the minus sign of the evolution equation
        out.push(acc.push(&hall_source(f, eta)).scaled(-1.0));
    }
    Trajectory::new(b.horizon(), out)
}

/// Real-space `(f·∇)g`, for cross-checking the divergence form.
#[cfg(test)]
fn directional_derivative(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    use crate::spectral::RealVectorField;
    use num_complex::Complex64;
    f.ensure_same_grid(g)?;
    let grid = f.grid();
    let ctx = grid.ctx();
    let fr = f.inverse_transform();
    let i = Complex64::new(0.0, 1.0);
    let mut out = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
    for (c, o) in out.iter_mut().enumerate() {
        for j in 0..3 {
            let mut d = g.component(c).to_vec();
            let n = grid.n();
            let mut idx = 0;
            for i2 in 0..n {
                for i1 in 0..n {
                    for i0 in 0..n {
                        d[idx] *= i * ctx.kvec(i0, i1, i2)[j];
                        idx += 1;
                    }
                }
            }
            let dr = crate::spectral::inverse_many(&ctx, &[&d])[0].clone();
            for (p, v) in o.iter_mut().enumerate() {
                *v += fr.component(j)[p] * dr[p];
            }
        }
    }
    let mut res = SpectralField::forward_transform(&RealVectorField::from_components(grid, out)?);
    crate::spectral::dealias(&mut res);
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, sine_mode};

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    /// Two solenoidal modes at `(1,0,0)` and `(0,1,0)`, plus a third at `(0,0,1)`.
    fn two_mode(g: GridSpec, a: f64) -> SpectralField {
        let f = &sine_mode(g, [1, 0, 0], [0.0, a, 0.5 * a]) + &sine_mode(g, [0, 1, 0], [0.0, 0.0, a]);
        (&f + &sine_mode(g, [0, 0, 1], [a, 0.0, 0.0])).with_solenoidal_flag(true)
    }

    #[test]
    fn constant_tensor_has_no_divergence() {
        let g = grid(8);
        let c = SpectralField::from_fn(g, |_| [1.0, -2.0, 0.5]);
        assert!(advection_divergence(&c, &c).unwrap().max_abs_coefficient() < 1e-15);
    }

    #[test]
    fn two_mode_product_matches_hand_expansion() {
        // f = a sin(k1·x), g = c sin(k2·x):
        // ∇·(f⊗g) = c/2 [ (a·(k1+k2)) sin((k1+k2)·x) - (a·(k1-k2)) sin((k1-k2)·x) ]
        let g = grid(16);
        let (k1, k2) = ([1i64, 2, 0], [0i64, 1, -1]);
        let (a, c) = ([0.3, -0.7, 1.1], [1.0, 0.4, -0.2]);
        let f = sine_mode(g, k1, a);
        let h = sine_mode(g, k2, c);
        let got = advection_divergence(&f, &h).unwrap();
        let plus = [k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2]];
        let minus = [k1[0] - k2[0], k1[1] - k2[1], k1[2] - k2[2]];
        let dot = |k: [i64; 3]| a[0] * k[0] as f64 + a[1] * k[1] as f64 + a[2] * k[2] as f64;
        let expect = &sine_mode(g, plus, c.map(|x| 0.5 * x * dot(plus)))
            - &sine_mode(g, minus, c.map(|x| 0.5 * x * dot(minus)));
        assert!(got.max_coeff_diff(&expect) < 1e-14, "{}", got.max_coeff_diff(&expect));
    }

    #[test]
    fn divergence_form_equals_advective_form_for_solenoidal_f() {
        let g = grid(16);
        let f = random_field(g, 4, 1, true);
        let h = random_field(g, 4, 2, false);
        let a = advection_divergence(&f, &h).unwrap();
        let b = directional_derivative(&f, &h).unwrap();
        assert!(a.max_coeff_diff(&b) < 1e-10 * a.max_abs_coefficient());
    }

    #[test]
    fn hall_tensor_of_one_mode_vanishes() {
        let g = grid(16);
        let b = sine_mode(g, [1, 2, 0], [2.0, -1.0, 0.5]);
        assert!(hall_tensor(&b).unwrap().max_abs_coefficient() < 1e-14);
        assert_eq!(hall_tensor(&SpectralField::zeros(g)).unwrap().max_abs_coefficient(), 0.0);
    }

    #[test]
    fn hall_tensor_rejects_compressible_input() {
        let g = grid(16);
        let b = sine_mode(g, [1, 0, 0], [1.0, 0.0, 0.0]);
        assert!(matches!(hall_tensor(&b), Err(Error::NotSolenoidal { .. })));
        assert!(matches!(hall_identity_check(&b), Err(Error::NotSolenoidal { .. })));
    }

    #[test]
    fn hall_identity_on_random_fields() {
        let g = grid(32);
        for seed in 0..3 {
            let b = random_field(g, g.dealias_cutoff(), seed, true);
            let d = hall_identity_check(&b).unwrap();
            assert!(d <= 1e-10, "seed {seed}: {d:e}");
        }
        assert_eq!(hall_identity_check(&SpectralField::zeros(g)).unwrap(), 0.0);
    }

    #[test]
    fn hall_identity_requires_band_limit() {
        let g = grid(16);
        let b = random_field(g, 7, 4, true);
        assert!(matches!(hall_identity_check(&b), Err(Error::BandLimit(_))));
    }

    #[test]
    fn trapezoid_weights() {
        assert_eq!(QuadratureSpec::weights(0, 0.1), vec![0.0]);
        assert_eq!(QuadratureSpec::weights(3, 1.0), vec![0.5, 1.0, 1.0, 0.5]);
        assert!(QuadratureSpec::new(7).is_err());
        assert_eq!(QuadratureSpec::default().node_count(), 64);
    }

    #[test]
    fn caloric_trajectory_starts_at_datum() {
        let g = grid(8);
        let f = random_field(g, 3, 9, true);
        let t = Trajectory::caloric(&f, 1.0, 8, 1.0, 1.0).unwrap();
        assert_eq!(t.node(0).max_coeff_diff(&f), 0.0);
        assert_eq!(t.node_count(), 8);
        assert!((t.time(8) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_trajectories_are_rejected() {
        let g = grid(8);
        let a = Trajectory::zeros(g, 1.0, 8).unwrap();
        let b = Trajectory::zeros(g, 1.0, 16).unwrap();
        let c = Trajectory::zeros(grid(16), 1.0, 8).unwrap();
        assert!(bilinear_b(1.0, 1.0, &a, &b, 3).is_err());
        assert!(bilinear_b(1.0, 1.0, &a, &c, 3).is_err());
        assert!(bilinear_b(1.0, 1.0, &a, &a, 9).is_err());
    }

    #[test]
    fn bilinear_form_vanishes_on_zero_input() {
        let g = grid(8);
        let z = Trajectory::zeros(g, 1.0, 8).unwrap();
        let f = Trajectory::caloric(&random_field(g, 2, 1, true), 1.0, 8, 1.0, 1.0).unwrap();
        assert_eq!(bilinear_b(1.0, 1.0, &z, &f, 8).unwrap().max_abs_coefficient(), 0.0);
        assert_eq!(bilinear_b(1.0, 1.0, &f, &z, 8).unwrap().max_abs_coefficient(), 0.0);
    }

    #[test]
    fn bilinear_form_is_linear_in_each_slot() {
        let g = grid(8);
        let f = Trajectory::caloric(&random_field(g, 2, 1, true), 1.0, 8, 0.8, 1.0).unwrap();
        let h = Trajectory::caloric(&random_field(g, 2, 2, true), 1.0, 8, 0.8, 1.0).unwrap();
        let once = bilinear_b(0.8, 1.0, &f, &h, 5).unwrap();
        let twice = bilinear_b(0.8, 1.0, &f.scaled(2.0), &h, 5).unwrap();
        assert_eq!(twice.max_coeff_diff(&once.scaled(2.0)), 0.0);
    }

    fn closed_form_error(m: usize) -> f64 {
        let g = grid(8);
        let (alpha, kappa, t) = (0.75, 1.0, 1.0);
        let f = two_mode(g, 1.0);
        let traj = Trajectory::constant(&f, t, m).unwrap();
        let got = bilinear_b(alpha, kappa, &traj, &traj, m).unwrap();
        let proj = leray_project(&advection_divergence(&f, &f).unwrap());
        let exact = proj.apply_radial(|k2| {
            let lam = kappa * k2.powf(alpha);
            if lam == 0.0 {
                t
            } else {
                (1.0 - (-lam * t).exp()) / lam
            }
        });
        got.max_coeff_diff(&exact)
    }

    #[test]
    fn bilinear_form_converges_at_second_order() {
        let (e1, e2) = (closed_form_error(16), closed_form_error(32));
        let order = (e1 / e2).log2();
        assert!((1.7..=2.3).contains(&order), "order {order}");
        assert!(e2 < 1e-3);
    }

    #[test]
    fn hall_form_closed_form_and_order() {
        let g = grid(8);
        let (a2, mu, eta, t) = (1.5, 1.0, 0.7, 0.5);
        let b = two_mode(g, 1.0);
        let src = curl(&symmetric_tensor_divergence(&g.ctx(), &b.inverse_transform())).scaled(eta);
        assert!(src.max_abs_coefficient() > 0.1);
        let exact = src.apply_radial(|k2| {
            let lam = mu * k2.powf(a2);
            if lam == 0.0 {
                t
            } else {
                (1.0 - (-lam * t).exp()) / lam
            }
        });
        let err = |m: usize| {
            let traj = Trajectory::constant(&b, t, m).unwrap();
            hall_b(a2, mu, eta, &traj, m).unwrap().max_coeff_diff(&exact)
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e2 < 1e-2 * exact.max_abs_coefficient());
        let ratio = e1 / e2;
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn hall_form_with_zero_eta_vanishes() {
        let g = grid(8);
        let traj = Trajectory::constant(&two_mode(g, 1.0), 1.0, 8).unwrap();
        assert_eq!(hall_b(1.5, 1.0, 0.0, &traj, 8).unwrap().max_abs_coefficient(), 0.0);
    }

    #[test]
    fn recursion_matches_direct_sum() {
        let g = grid(8);
        let f = Trajectory::caloric(&random_field(g, 2, 3, true), 0.7, 10, 0.9, 1.0).unwrap();
        let h = Trajectory::caloric(&random_field(g, 2, 4, true), 0.7, 10, 0.9, 1.0).unwrap();
        let path = bilinear_b_path(0.9, 1.0, &f, &h).unwrap();
        let hall = hall_b_path(1.5, 1.0, 0.5, &f).unwrap();
        for m in [0, 1, 5, 10] {
            let direct = bilinear_b(0.9, 1.0, &f, &h, m).unwrap();
            let scale = direct.max_abs_coefficient().max(1e-300);
            assert!(path.node(m).max_coeff_diff(&direct) <= 1e-12 * scale.max(1e-3));
            let dh = hall_b(1.5, 1.0, 0.5, &f, m).unwrap();
            assert!(hall.node(m).max_coeff_diff(&dh) <= 1e-12 * dh.max_abs_coefficient().max(1e-3));
        }
        assert_eq!(path.node(0).max_abs_coefficient(), 0.0);
    }

    #[test]
    fn bilinear_output_is_solenoidal() {
        let g = grid(16);
        let f = Trajectory::caloric(&random_field(g, 4, 5, true), 0.5, 8, 0.9, 1.0).unwrap();
        let h = Trajectory::caloric(&random_field(g, 4, 6, true), 0.5, 8, 0.9, 1.0).unwrap();
        let out = bilinear_b(0.9, 1.0, &f, &h, 8).unwrap();
        assert!(out.divergence_residual() <= 1e-12 * out.max_abs_coefficient());
    }
}
