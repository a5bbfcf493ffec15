//! The admissible parameter region, the contraction exponents, and the
//! Beta-function identity behind the time integrals.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on the non-strict inequalities, so that exact boundary values such as
/// `β = (γ+1)α₂/(2α₁)` survive rounding.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Full parameter tuple of the generalized Hall-MHD system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSet {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub gamma: f64,
    pub nu: f64,
    pub mu: f64,
    pub eta: f64,
}

impl ParamSet {
    /// γ = 1.2, β = 2.2, α₁ = 0.9, α₂ = 1.5, ν = μ = η = 1.
    pub fn reference() -> Self {
        ParamSet { alpha1: 0.9, alpha2: 1.5, beta: 2.2, gamma: 1.2, nu: 1.0, mu: 1.0, eta: 1.0 }
    }

    /// Path-space weight of `u`: `(2α₁ - γ)/(2α₁)`.
    pub fn weight_u(&self) -> f64 {
        (2.0 * self.alpha1 - self.gamma) / (2.0 * self.alpha1)
    }

    /// Path-space weight of `b`: `(2α₂ - β)/(2α₂)`.
    pub fn weight_b(&self) -> f64 {
        (2.0 * self.alpha2 - self.beta) / (2.0 * self.alpha2)
    }

    fn check_positive(&self) -> Result<()> {
        let named = [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("nu", self.nu),
            ("mu", self.mu),
        ];
        for (name, v) in named {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidArgument(format!("eta = {} must be nonnegative", self.eta)));
        }
        Ok(())
    }
}

/// One of the four lines of the admissible region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintLine {
    /// `γ >= max{1, α₁/α₂}`
    GammaLowerBound,
    /// `β >= max{2, (γ+1)α₂/(2α₁)}`
    BetaLowerBound,
    /// `γ/2 < α₁ < γ`
    Alpha1Window,
    /// `β/2 < α₂ < β`
    Alpha2Window,
}

impl fmt::Display for ConstraintLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintLine::GammaLowerBound => "gamma >= max{1, alpha1/alpha2}",
            ConstraintLine::BetaLowerBound => "beta >= max{2, (gamma+1) alpha2 / (2 alpha1)}",
            ConstraintLine::Alpha1Window => "gamma/2 < alpha1 < gamma",
            ConstraintLine::Alpha2Window => "beta/2 < alpha2 < beta",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineCheck {
    pub line: ConstraintLine,
    /// Signed distance to the boundary; negative when violated.
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub params: ParamSet,
    pub verdict: Verdict,
    pub lines: Vec<LineCheck>,
    pub violated_constraints: Vec<ConstraintLine>,
    /// `(e₁, e₂, e₃, e₄)`: time exponents of the four bilinear estimates.
    pub exponents: [f64; 4],
    pub analytic_a: f64,
    /// Indices (1-based) of exponents that vanish.
    pub boundary_flags: Vec<usize>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.verdict == Verdict::Feasible
    }

    pub fn summary(&self) -> String {
        if self.is_feasible() {
            return format!("feasible, a = {:.6}", self.analytic_a);
        }
        let names: Vec<String> = self.violated_constraints.iter().map(|l| l.to_string()).collect();
        format!("violates {}", names.join("; "))
    }
}

/// The four exponents of `T` in the bilinear estimates, in order:
/// `B_{α₁}(u,u)`, `B_{α₁}(b,b)`, `B_{α₂}(b,u)`, and the Hall form.
pub fn exponents(p: &ParamSet) -> [f64; 4] {
    let (a1, a2) = (p.alpha1, p.alpha2);
    [
        (p.gamma - 1.0) / (2.0 * a1),
        p.beta / a2 - (p.gamma + 1.0) / (2.0 * a1),
        p.gamma / (2.0 * a1) - 1.0 / (2.0 * a2),
        (p.beta - 2.0) / (2.0 * a2),
    ]
}

/// Evaluates the admissible region with margins and the derived exponent `a`.
pub fn feasibility(p: &ParamSet) -> Result<FeasibilityReport> {
    p.check_positive()?;
    let ge = |lhs: f64, rhs: f64| lhs - rhs;
    let m1 = ge(p.gamma, 1f64.max(p.alpha1 / p.alpha2));
    let m2 = ge(p.beta, 2f64.max((p.gamma + 1.0) * p.alpha2 / (2.0 * p.alpha1)));
    let m3 = (p.alpha1 - p.gamma / 2.0).min(p.gamma - p.alpha1);
    let m4 = (p.alpha2 - p.beta / 2.0).min(p.beta - p.alpha2);
    let lines = vec![
        LineCheck { line: ConstraintLine::GammaLowerBound, margin: m1, satisfied: m1 >= -BOUNDARY_SLACK },
        LineCheck { line: ConstraintLine::BetaLowerBound, margin: m2, satisfied: m2 >= -BOUNDARY_SLACK },
        LineCheck { line: ConstraintLine::Alpha1Window, margin: m3, satisfied: m3 > 0.0 },
        LineCheck { line: ConstraintLine::Alpha2Window, margin: m4, satisfied: m4 > 0.0 },
    ];
    let violated_constraints: Vec<ConstraintLine> = lines.iter().filter(|l| !l.satisfied).map(|l| l.line).collect();
    let mut exps = exponents(p);
    for e in exps.iter_mut() {
        if e.abs() < BOUNDARY_SLACK {
            *e = 0.0;
        }
    }
    let analytic_a = exps.iter().copied().fold(f64::INFINITY, f64::min);
    let boundary_flags = exps.iter().enumerate().filter(|(_, &e)| e == 0.0).map(|(i, _)| i + 1).collect();
    let verdict = if violated_constraints.is_empty() { Verdict::Feasible } else { Verdict::Infeasible };
    Ok(FeasibilityReport { params: *p, verdict, lines, violated_constraints, exponents: exps, analytic_a, boundary_flags })
}

/// Fails with [`Error::Infeasible`] unless the parameters are admissible.
pub fn require_feasible(p: &ParamSet) -> Result<FeasibilityReport> {
    let report = feasibility(p)?;
    if !report.is_feasible() {
        return Err(Error::Infeasible(Box::new(report)));
    }
    if report.analytic_a == 0.0 {
        log::warn!(
            "parameters sit on the boundary: exponent(s) {:?} vanish, so T^a gives no smallness",
            report.boundary_flags
        );
    }
    Ok(report)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function by the Lanczos approximation (g = 7, 9 terms), with reflection below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

pub fn beta_fn(x: f64, y: f64) -> f64 {
    gamma(x) * gamma(y) / gamma(x + y)
}

/// Tanh-sinh rule on `[0, π/2]` for integrands singular at one or both ends.
///
/// `f(φ, φ, π/2 - φ)` receives the node and both endpoint distances computed
/// without cancellation.
fn tanh_sinh_quarter(f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    const H: f64 = 1.0 / 64.0;
    const KMAX: i64 = 6 * 64;
    let half = PI / 4.0;
    let mut sum = 0.0;
    for k in -KMAX..=KMAX {
        let t = k as f64 * H;
        let u = 0.5 * PI * t.sinh();
        let cu = u.cosh();
        let w = 0.5 * PI * t.cosh() / (cu * cu);
        // x = tanh(u); 1 - x and 1 + x without cancellation
        let one_minus = (-u).exp() / cu;
        let one_plus = u.exp() / cu;
        if one_minus == 0.0 || one_plus == 0.0 {
            continue;
        }
        let from_lo = half * one_plus;
        let from_hi = half * one_minus;
        let v = f(from_lo, from_lo, from_hi);
        if v.is_finite() {
            sum += w * v;
        }
    }
    half * H * sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaCheck {
    pub alpha: f64,
    pub theta: f64,
    pub t: f64,
    pub quadrature: f64,
    pub closed_form: f64,
    pub rel_error: f64,
}

/// `∫₀ᵗ (t-τ)^{-1/α} τ^{-θ/α} dτ`, by the substitution `τ = t sin²φ` and tanh-sinh quadrature.
pub fn beta_integral_quadrature(alpha: f64, theta: f64, t: f64) -> f64 {
    // integrand becomes 2 t^{1-1/α-θ/α} cos^{1-2/α}φ sin^{1-2θ/α}φ
    let pc = 1.0 - 2.0 / alpha;
    let ps = 1.0 - 2.0 * theta / alpha;
    let integral = tanh_sinh_quarter(|_, lo, hi| {
        // sin φ from the lower distance, cos φ = sin(π/2 - φ) from the upper one
        lo.sin().powf(ps) * hi.sin().powf(pc)
    });
    2.0 * t.powf(1.0 - 1.0 / alpha - theta / alpha) * integral
}

/// `t^{1-1/α-θ/α} B(1-θ/α, 1-1/α)`.
pub fn beta_integral_closed_form(alpha: f64, theta: f64, t: f64) -> f64 {
    t.powf(1.0 - 1.0 / alpha - theta / alpha) * beta_fn(1.0 - theta / alpha, 1.0 - 1.0 / alpha)
}

pub fn beta_check(alpha: f64, theta: f64, t: f64) -> Result<BetaCheck> {
    if !(alpha > 1.0) || !(theta > 0.0 && theta < alpha) || !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need alpha > 1, 0 < theta < alpha, t > 0; got alpha = {alpha}, theta = {theta}, t = {t}"
        )));
    }
    let quadrature = beta_integral_quadrature(alpha, theta, t);
    let closed_form = beta_integral_closed_form(alpha, theta, t);
    Ok(BetaCheck {
        alpha,
        theta,
        t,
        quadrature,
        closed_form,
        rel_error: (quadrature - closed_form).abs() / closed_form.abs(),
    })
}

/// The 5 × 5 × 3 verification grid: `α ∈ {1.1, 1.25, 1.5, 2, 3}`,
/// `θ/α ∈ {0.1, 0.3, 0.5, 0.7, 0.9}`, `t ∈ {0.1, 1, 10}`.
pub fn beta_check_cases() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(75);
    for alpha in [1.1, 1.25, 1.5, 2.0, 3.0] {
        for frac in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for t in [0.1, 1.0, 10.0] {
                out.push((alpha, frac * alpha, t));
            }
        }
    }
    out
}
