//! The mixed delay-advance equation
//!
//! ```text
//! x'(t) + δ₁ a(t) x(g(t)) + δ₂ b(t) x(h(t)) = 0,   t ≥ t₀
//! ```
//!
//! with `a, b ≥ 0`, `g(t) ≤ t ≤ h(t)`, its initial-value problem, sampling
//! based hypothesis checks, and constant envelope bounds.

mod expr;
mod spec_file;

use std::fmt;

use thiserror::Error;

pub use expr::{parse_expr, CoefficientExpr, ParseError, ParseErrorKind};
pub use spec_file::{SpecFile, SpecFileError};

use crate::scalar::Real;

/// One of the two signs δ₁, δ₂.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_int(v: i64) -> Option<Self> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn as_int(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }
}

/// The four sign combinations of (δ₁, δ₂).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignPattern {
    /// δ₁ = δ₂ = +1: `x' + a x(g) + b x(h) = 0`.
    BothPositive,
    /// δ₁ = δ₂ = −1: `x' − a x(g) − b x(h) = 0`.
    BothNegative,
    /// δ₁ = +1, δ₂ = −1: `x' + a x(g) − b x(h) = 0`.
    PositiveDelay,
    /// δ₁ = −1, δ₂ = +1: `x' − a x(g) + b x(h) = 0`.
    NegativeDelay,
}

impl SignPattern {
    pub fn of(delta1: Sign, delta2: Sign) -> Self {
        match (delta1, delta2) {
            (Sign::Plus, Sign::Plus) => SignPattern::BothPositive,
            (Sign::Minus, Sign::Minus) => SignPattern::BothNegative,
            (Sign::Plus, Sign::Minus) => SignPattern::PositiveDelay,
            (Sign::Minus, Sign::Plus) => SignPattern::NegativeDelay,
        }
    }

    pub fn signs(self) -> (Sign, Sign) {
        match self {
            SignPattern::BothPositive => (Sign::Plus, Sign::Plus),
            SignPattern::BothNegative => (Sign::Minus, Sign::Minus),
            SignPattern::PositiveDelay => (Sign::Plus, Sign::Minus),
            SignPattern::NegativeDelay => (Sign::Minus, Sign::Plus),
        }
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (d1, d2) = self.signs();
        write!(
            f,
            "(delta1, delta2) = ({:+}, {:+})",
            d1.as_int(),
            d2.as_int()
        )
    }
}

/// Closed interval `[lo, hi]` of `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Window<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Window { lo, hi }
    }

    pub fn len(&self) -> T {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }

    pub fn contains(&self, t: T) -> bool {
        t >= self.lo && t <= self.hi
    }

    pub fn contains_window(&self, other: &Window<T>) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }

    /// `samples` equally spaced points including both ends.
    pub fn sample_points(&self, samples: usize) -> impl Iterator<Item = T> + '_ {
        let n = samples.max(2) - 1;
        let dt = self.len() / T::from_count(n);
        (0..=n).map(move |i| {
            if i == n {
                self.hi
            } else {
                self.lo + dt * T::from_count(i)
            }
        })
    }

    /// Number of points with spacing at most `step`, including both ends.
    pub fn samples_for_step(&self, step: T) -> usize {
        let n = (self.len() / step).ceil().to_usize().unwrap_or(1).max(1);
        n + 1
    }
}

impl<T: Real> fmt::Display for Window<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// The equation: coefficients, arguments, signs and start time.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<T> {
    pub a: CoefficientExpr<T>,
    pub b: CoefficientExpr<T>,
    pub g: CoefficientExpr<T>,
    pub h: CoefficientExpr<T>,
    pub delta1: Sign,
    pub delta2: Sign,
    pub t0: T,
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(
        a: CoefficientExpr<T>,
        b: CoefficientExpr<T>,
        g: CoefficientExpr<T>,
        h: CoefficientExpr<T>,
        delta1: Sign,
        delta2: Sign,
        t0: T,
    ) -> Self {
        ProblemSpec {
            a,
            b,
            g,
            h,
            delta1,
            delta2,
            t0,
        }
    }

    /// Builds a spec from expression strings.
    pub fn parse(
        a: &str,
        b: &str,
        g: &str,
        h: &str,
        delta1: Sign,
        delta2: Sign,
        t0: T,
    ) -> Result<Self, ParseError> {
        Ok(ProblemSpec {
            a: parse_expr(a)?,
            b: parse_expr(b)?,
            g: parse_expr(g)?,
            h: parse_expr(h)?,
            delta1,
            delta2,
            t0,
        })
    }

    /// Autonomous equation `x' + δ₁ a x(t−τ) + δ₂ b x(t+σ) = 0`.
    pub fn autonomous(a: T, b: T, tau: T, sigma: T, delta1: Sign, delta2: Sign, t0: T) -> Self {
        use CoefficientExpr::*;
        ProblemSpec {
            a: Const(a),
            b: Const(b),
            g: Sub(Box::new(Var), Box::new(Const(tau))),
            h: Add(Box::new(Var), Box::new(Const(sigma))),
            delta1,
            delta2,
            t0,
        }
    }

    pub fn pattern(&self) -> SignPattern {
        SignPattern::of(self.delta1, self.delta2)
    }

    pub fn a(&self, t: T) -> T {
        self.a.eval(t)
    }
    pub fn b(&self, t: T) -> T {
        self.b.eval(t)
    }
    pub fn g(&self, t: T) -> T {
        self.g.eval(t)
    }
    pub fn h(&self, t: T) -> T {
        self.h.eval(t)
    }

    /// `x'(t)` implied by the equation given the two deviated values.
    pub fn rhs(&self, t: T, x_delayed: T, x_advanced: T) -> T {
        -(self.delta1.value::<T>() * self.a(t) * x_delayed)
            - self.delta2.value::<T>() * self.b(t) * x_advanced
    }
}

/// Initial-value problem: `x(t) = φ(t)` for `t < t₀`, `x(t₀) = x₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ivp<T> {
    pub spec: ProblemSpec<T>,
    pub phi: CoefficientExpr<T>,
    pub x0: T,
}

impl<T: Real> Ivp<T> {
    pub fn new(spec: ProblemSpec<T>, phi: CoefficientExpr<T>, x0: T) -> Self {
        Ivp { spec, phi, x0 }
    }
}

/// Constant envelope of the coefficients and deviations on a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds<T> {
    pub a1: T,
    pub a2: T,
    pub b1: T,
    pub b2: T,
    /// Largest delay `t − g(t)`.
    pub tau: T,
    /// Largest advance `h(t) − t`.
    pub sigma: T,
    pub window: Window<T>,
}

impl<T: Real> Bounds<T> {
    /// Envelope given directly (window is informational).
    pub fn from_constants(a1: T, a2: T, b1: T, b2: T, tau: T, sigma: T) -> Self {
        Bounds {
            a1,
            a2,
            b1,
            b2,
            tau,
            sigma,
            window: Window::new(T::zero(), T::zero()),
        }
    }

    /// Degenerate envelope of the autonomous equation with constants `a`, `b`.
    pub fn autonomous(a: T, b: T, tau: T, sigma: T) -> Self {
        Self::from_constants(a, a, b, b, tau, sigma)
    }

    /// Whether every sampled value lies within the envelope widened by `eps`.
    pub fn contains_samples(&self, spec: &ProblemSpec<T>, t: T, eps: T) -> bool {
        let (a, b) = (spec.a(t), spec.b(t));
        let (d, s) = (t - spec.g(t), spec.h(t) - t);
        a >= self.a1 - eps
            && a <= self.a2 + eps
            && b >= self.b1 - eps
            && b <= self.b2 + eps
            && d <= self.tau + eps
            && s <= self.sigma + eps
    }
}

/// Which standing hypothesis a report entry covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// `a(t) ≥ 0`, `b(t) ≥ 0`, finite values.
    NonnegativeCoefficients,
    /// `g(t) ≤ t ≤ h(t)`.
    DeviatingArguments,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::NonnegativeCoefficients => "a1: a(t) >= 0, b(t) >= 0",
            Hypothesis::DeviatingArguments => "a2: g(t) <= t <= h(t)",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck<T> {
    pub hypothesis: Hypothesis,
    pub passed: bool,
    /// First sample point where the hypothesis failed.
    pub first_violation: Option<T>,
}

/// Outcome of [`validate_spec`]. Passing is evidence on the sample set only.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport<T> {
    pub window: Window<T>,
    pub samples: usize,
    pub checks: Vec<HypothesisCheck<T>>,
    /// `g(t) → ∞` cannot be decided on a finite window.
    pub window_limited: bool,
}

impl<T: Real> ValidationReport<T> {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, h: Hypothesis) -> &HypothesisCheck<T> {
        self.checks
            .iter()
            .find(|c| c.hypothesis == h)
            .expect("every hypothesis is checked")
    }
}

impl<T: Real> fmt::Display for ValidationReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "window: {}", self.window)?;
        writeln!(f, "samples: {}", self.samples)?;
        for c in &self.checks {
            match c.first_violation {
                None => writeln!(f, "{}: pass", c.hypothesis)?,
                Some(t) => writeln!(f, "{}: FAIL at t = {}", c.hypothesis, t)?,
            }
        }
        if self.window_limited {
            writeln!(f, "caveat: window-limited (lim g(t) = inf not verifiable)")?;
        }
        Ok(())
    }
}

/// Checks the standing hypotheses on `samples` equally spaced points.
pub fn validate_spec<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    samples: usize,
) -> ValidationReport<T> {
    let mut coef = None;
    let mut args = None;
    for t in window.sample_points(samples) {
        let (a, b) = (spec.a(t), spec.b(t));
        if coef.is_none() && !(a >= T::zero() && b >= T::zero() && a.is_finite() && b.is_finite()) {
            coef = Some(t);
        }
        let (g, h) = (spec.g(t), spec.h(t));
        if args.is_none() && !(g <= t && h >= t) {
            args = Some(t);
        }
        if coef.is_some() && args.is_some() {
            break;
        }
    }
    let entry = |hypothesis, first_violation: Option<T>| HypothesisCheck {
        hypothesis,
        passed: first_violation.is_none(),
        first_violation,
    };
    ValidationReport {
        window,
        samples,
        checks: vec![
            entry(Hypothesis::NonnegativeCoefficients, coef),
            entry(Hypothesis::DeviatingArguments, args),
        ],
        window_limited: true,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("window too short: need at least 2 samples on a nonempty window")]
    WindowTooShort,
}

/// Outward inflation applied to sampled extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inflation<T> {
    /// 0 when all four expressions are constant or sinusoid-affine, else 1e−6 relative.
    Auto,
    /// Fixed relative inflation.
    Relative(T),
}

/// Sampled envelope with the default inflation policy.
pub fn extract_bounds<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    samples: usize,
) -> Result<Bounds<T>, BoundsError> {
    extract_bounds_with(spec, window, samples, Inflation::Auto)
}

pub fn extract_bounds_with<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    samples: usize,
    inflation: Inflation<T>,
) -> Result<Bounds<T>, BoundsError> {
    if samples < 2 || window.is_empty() {
        return Err(BoundsError::WindowTooShort);
    }
    let inf = T::infinity();
    let (mut a1, mut a2, mut b1, mut b2) = (inf, -inf, inf, -inf);
    let (mut tau, mut sigma) = (T::zero(), T::zero());
    for t in window.sample_points(samples) {
        let (a, b) = (spec.a(t), spec.b(t));
        a1 = a1.min(a);
        a2 = a2.max(a);
        b1 = b1.min(b);
        b2 = b2.max(b);
        tau = tau.max(t - spec.g(t));
        sigma = sigma.max(spec.h(t) - t);
    }
    let rel = match inflation {
        Inflation::Relative(r) => r,
        Inflation::Auto => {
            let exact = [&spec.a, &spec.b, &spec.g, &spec.h]
                .iter()
                .all(|e| e.is_sinusoid_affine());
            if exact {
                T::zero()
            } else {
                T::lit(1e-6)
            }
        }
    };
    let down = |v: T| v - rel * v.abs();
    let up = |v: T| v + rel * v.abs();
    Ok(Bounds {
        a1: down(a1),
        a2: up(a2),
        b1: down(b1),
        b2: up(b2),
        tau: up(tau),
        sigma: up(sigma),
        window,
    })
}
