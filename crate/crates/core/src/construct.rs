//! Positive monotone solutions of `x' + a x(g) − b x(h) = 0` built from a
//! generating function `u`.
//!
//! In the delay-dominant case (`a ≥ b`) the substitution `x = e^{−∫u}` turns
//! the equation into the fixed-point problem
//!
//! ```text
//! u(t) = a(t) exp(∫_{g(t)}^t u) − b(t) exp(−∫_t^{h(t)} u),
//! ```
//!
//! and any nonnegative `u₀` that is a supersolution (the right-hand side is at
//! most `u₀`) starts a pointwise nonincreasing sequence of iterates bounded
//! below by `a − b ≥ 0`. The advance-dominant case (`b ≥ a`, `x = e^{+∫u}`)
//! mirrors this with the roles of the two terms swapped. `u` is zero before
//! the activation time `t₁`.
//!
//! On a grid the map stays order preserving (trapezoid weights are
//! nonnegative), so the discrete iterates inherit the monotone descent.

use std::fmt;
use std::io;

use thiserror::Error;

use crate::charroots::{positive_root_exists, CharProblem};
use crate::gridfn::{GridError, GridFunction};
use crate::model::{extract_bounds, ProblemSpec, SignPattern, Window};
use crate::scalar::Real;
use crate::simulate::equation_residual;

/// Which of the two dominance cases the generating function belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// `a ≥ b`, nonincreasing solution `x = e^{−∫u}`.
    DelayDominant,
    /// `b ≥ a`, nondecreasing solution `x = e^{+∫u}`.
    AdvanceDominant,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::DelayDominant => "delay-dominant",
            Case::AdvanceDominant => "advance-dominant",
        })
    }
}

/// Monotonicity of the synthesized solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Decreasing,
    Increasing,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructError {
    #[error("construction needs delta1 = +1, delta2 = -1, got {0}")]
    WrongSignPattern(SignPattern),
    #[error("generating function is negative at t = {t}")]
    NegativeGenerator { t: f64 },
    #[error("t = {t} precedes the activation time")]
    BeforeActivation { t: f64 },
    #[error("starting function is not a supersolution: residual {residual:e} at t = {t}")]
    NotSupersolution { t: f64, residual: f64 },
    #[error("dominance hypothesis violated at t = {t}")]
    DominanceViolated { t: f64 },
    #[error("no starting candidate satisfies the integral inequality")]
    NoStarter,
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn f64_of<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// A nonnegative `u` on `[t₁, T]`, taken to be zero before `t₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingCandidate<T> {
    pub u: GridFunction<T>,
    pub case: Case,
    pub t1: T,
}

impl<T: Real> GeneratingCandidate<T> {
    /// `t₁` is the first grid node.
    pub fn new(u: GridFunction<T>, case: Case) -> Result<Self, ConstructError> {
        if let Some((t, _)) = u.iter().find(|&(_, v)| !(v >= T::zero())) {
            return Err(ConstructError::NegativeGenerator { t: f64_of(t) });
        }
        let t1 = u.t_start();
        Ok(GeneratingCandidate { u, case, t1 })
    }

    pub fn constant(window: Window<T>, step: T, c: T, case: Case) -> Result<Self, ConstructError> {
        Self::new(GridFunction::from_fn(window, step, |_| c)?, case)
    }

    /// `∫_lo^hi u` with `u = 0` before `t₁` and clamped past the grid end.
    fn integral(&self, lo: T, hi: T) -> Result<T, ConstructError> {
        let (lo, hi) = (lo.max(self.t1), hi.max(self.t1));
        Ok(self.u.integrate(lo, hi)?.value)
    }
}

fn check_pattern<T: Real>(spec: &ProblemSpec<T>) -> Result<(), ConstructError> {
    match spec.pattern() {
        SignPattern::PositiveDelay => Ok(()),
        p => Err(ConstructError::WrongSignPattern(p)),
    }
}

/// `a e^{∫_g^t u} − b e^{−∫_t^h u} − u(t)`; nonpositive where the
/// delay-dominant inequality holds.
pub fn ineq_residual_delay<T: Real>(
    cand: &GeneratingCandidate<T>,
    spec: &ProblemSpec<T>,
    t: T,
) -> Result<T, ConstructError> {
    check_pattern(spec)?;
    if t < cand.t1 {
        return Err(ConstructError::BeforeActivation { t: f64_of(t) });
    }
    let back = cand.integral(spec.g(t), t)?;
    let fwd = cand.integral(t, spec.h(t))?;
    Ok(spec.a(t) * back.exp_sat() - spec.b(t) * (-fwd).exp() - cand.u.value_at(t))
}

/// `b e^{∫_t^h u} − a e^{−∫_g^t u} − u(t)`; nonpositive where the
/// advance-dominant inequality holds.
pub fn ineq_residual_advance<T: Real>(
    cand: &GeneratingCandidate<T>,
    spec: &ProblemSpec<T>,
    t: T,
) -> Result<T, ConstructError> {
    check_pattern(spec)?;
    if t < cand.t1 {
        return Err(ConstructError::BeforeActivation { t: f64_of(t) });
    }
    let back = cand.integral(spec.g(t), t)?;
    let fwd = cand.integral(t, spec.h(t))?;
    Ok(spec.b(t) * fwd.exp_sat() - spec.a(t) * (-back).exp() - cand.u.value_at(t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions<T> {
    /// Stop when the largest node change falls to this.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for IterationOptions<T> {
    fn default() -> Self {
        IterationOptions {
            tol: T::lit(1e-8),
            max_iter: 10_000,
        }
    }
}

/// The iteration map sampled once on a fixed grid.
#[derive(Debug, Clone)]
struct IterationMap<T> {
    case: Case,
    t1: T,
    nodes: Vec<T>,
    a: Vec<T>,
    b: Vec<T>,
    g: Vec<T>,
    h: Vec<T>,
}

impl<T: Real> IterationMap<T> {
    fn new(spec: &ProblemSpec<T>, grid: &GridFunction<T>, case: Case) -> Self {
        let nodes: Vec<T> = grid.iter().map(|(t, _)| t).collect();
        IterationMap {
            case,
            t1: grid.t_start(),
            a: nodes.iter().map(|&t| spec.a(t)).collect(),
            b: nodes.iter().map(|&t| spec.b(t)).collect(),
            g: nodes.iter().map(|&t| spec.g(t)).collect(),
            h: nodes.iter().map(|&t| spec.h(t)).collect(),
            nodes,
        }
    }

    fn apply(&self, u: &GridFunction<T>) -> GridFunction<T> {
        let cum = u.cumulative();
        let values = (0..self.nodes.len())
            .map(|i| {
                let t = self.nodes[i];
                let back = cum.integral(self.g[i].max(self.t1), t);
                let fwd = cum.integral(t, self.h[i]);
                match self.case {
                    Case::DelayDominant => self.a[i] * back.exp_sat() - self.b[i] * (-fwd).exp(),
                    Case::AdvanceDominant => self.b[i] * fwd.exp_sat() - self.a[i] * (-back).exp(),
                }
            })
            .collect();
        u.with_values(values).expect("same grid")
    }

    /// Lower bound every iterate from a nonnegative start satisfies.
    fn floor(&self, i: usize) -> T {
        match self.case {
            Case::DelayDominant => self.a[i] - self.b[i],
            Case::AdvanceDominant => self.b[i] - self.a[i],
        }
    }

    fn looks_past_end(&self) -> bool {
        let end = *self.nodes.last().expect("nonempty");
        self.h.iter().any(|&h| h > end)
    }

    fn delay_margin(&self) -> T {
        self.nodes
            .iter()
            .zip(&self.g)
            .map(|(&t, &g)| t - g)
            .fold(T::zero(), T::max)
    }

    fn advance_margin(&self) -> T {
        self.nodes
            .iter()
            .zip(&self.h)
            .map(|(&t, &h)| h - t)
            .fold(T::zero(), T::max)
    }
}

/// Lazily produced iterates `u₁, u₂, …` of the monotone scheme.
#[derive(Debug, Clone)]
pub struct Iterates<T> {
    map: IterationMap<T>,
    current: GridFunction<T>,
}

impl<T: Real> Iterates<T> {
    pub fn current(&self) -> &GridFunction<T> {
        &self.current
    }

    /// Pointwise lower bound `a − b` (delay) or `b − a` (advance) at node `i`.
    pub fn lower_bound(&self, i: usize) -> T {
        self.map.floor(i)
    }
}

impl<T: Real> Iterator for Iterates<T> {
    type Item = GridFunction<T>;

    fn next(&mut self) -> Option<Self::Item> {
        let next = self.map.apply(&self.current);
        self.current = next.clone();
        Some(next)
    }
}

/// Validates the preconditions and returns the iterate stream. The start is
/// resampled onto `window` with its own grid step; `t₁ = window.lo`.
pub fn iterates<T: Real>(
    u0: &GeneratingCandidate<T>,
    spec: &ProblemSpec<T>,
    window: Window<T>,
    tol: T,
) -> Result<Iterates<T>, ConstructError> {
    check_pattern(spec)?;
    let start = GridFunction::from_fn(window, u0.u.step(), |t| {
        if t < u0.t1 {
            T::zero()
        } else {
            u0.u.value_at(t)
        }
    })?;
    if let Some((t, _)) = start.iter().find(|&(_, v)| !(v >= T::zero())) {
        return Err(ConstructError::NegativeGenerator { t: f64_of(t) });
    }
    let map = IterationMap::new(spec, &start, u0.case);
    for (i, &t) in map.nodes.iter().enumerate() {
        if map.floor(i) < -tol {
            return Err(ConstructError::DominanceViolated { t: f64_of(t) });
        }
    }
    let first = map.apply(&start);
    for (i, (&m, &u)) in first.values().iter().zip(start.values()).enumerate() {
        if !(m - u <= tol) {
            return Err(ConstructError::NotSupersolution {
                t: f64_of(map.nodes[i]),
                residual: f64_of(m - u),
            });
        }
    }
    Ok(Iterates {
        map,
        current: start,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionResult<T> {
    pub case: Case,
    pub u_limit: GridFunction<T>,
    /// Normalised to `x(t₁) = 1`, and equal to 1 before `t₁`.
    pub x: GridFunction<T>,
    pub iterations: usize,
    /// `max (map(u) − u)` at the last iterate.
    pub max_ineq_residual: T,
    /// Equation residual on the interior (see [`equation_residual`]).
    pub max_eq_residual: T,
    pub converged: bool,
    /// Some advanced argument reached past the window end.
    pub extrapolated: bool,
    /// Excluded left/right margins used for the residual.
    pub margins: (T, T),
}

impl<T: Real> ConstructionResult<T> {
    /// `t,u,x` rows with a header line.
    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "u", "x"])?;
        for ((t, u), x) in self.u_limit.iter().zip(self.x.values()) {
            out.write_record([t.to_string(), u.to_string(), x.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("case: {}\n", self.case));
        s.push_str(&format!("converged: {}\n", self.converged));
        s.push_str(&format!("iterations: {}\n", self.iterations));
        s.push_str(&format!(
            "max_ineq_residual: {:e}\n",
            self.max_ineq_residual
        ));
        s.push_str(&format!("max_eq_residual: {:e}\n", self.max_eq_residual));
        s.push_str(&format!(
            "x_end: {}\n",
            self.x.values().last().copied().unwrap_or(T::nan())
        ));
        let mut caveats = vec!["window-limited"];
        if self.extrapolated {
            caveats.push("extrapolation-flagged");
        }
        s.push_str(&format!("caveats: {}\n", caveats.join(", ")));
        s
    }
}

fn run<T: Real>(
    u0: &GeneratingCandidate<T>,
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &IterationOptions<T>,
) -> Result<ConstructionResult<T>, ConstructError> {
    let mut it = iterates(u0, spec, window, opts.tol)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let prev = it.current().clone();
        let next = it.next().expect("infinite iterator");
        iterations += 1;
        if next.max_abs_diff(&prev) <= opts.tol {
            converged = true;
            break;
        }
    }
    let u_limit = it.current().clone();
    let mapped = it.map.apply(&u_limit);
    let max_ineq_residual = mapped
        .values()
        .iter()
        .zip(u_limit.values())
        .map(|(&m, &u)| m - u)
        .fold(T::neg_infinity(), T::max);
    let monotonicity = match u0.case {
        Case::DelayDominant => Monotonicity::Decreasing,
        Case::AdvanceDominant => Monotonicity::Increasing,
    };
    // Rounding can leave a limit a hair below zero when a ≡ b.
    let clipped = u_limit.map(|_, v| v.max(T::zero()));
    let x = synthesize_solution(&clipped, monotonicity, window.lo)?;
    let margins = (it.map.delay_margin(), it.map.advance_margin());
    let max_eq_residual = equation_residual(&x, spec, margins.0, margins.1);
    Ok(ConstructionResult {
        case: u0.case,
        u_limit,
        x,
        iterations,
        max_ineq_residual,
        max_eq_residual,
        converged,
        extrapolated: it.map.looks_past_end(),
        margins,
    })
}

/// Runs the delay-dominant iteration from a supersolution `u0`.
pub fn iterate_delay<T: Real>(
    u0: &GeneratingCandidate<T>,
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &IterationOptions<T>,
) -> Result<ConstructionResult<T>, ConstructError> {
    let u0 = GeneratingCandidate {
        case: Case::DelayDominant,
        ..u0.clone()
    };
    run(&u0, spec, window, opts)
}

/// Runs the advance-dominant iteration from a supersolution `u0`.
pub fn iterate_advance<T: Real>(
    u0: &GeneratingCandidate<T>,
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &IterationOptions<T>,
) -> Result<ConstructionResult<T>, ConstructError> {
    let u0 = GeneratingCandidate {
        case: Case::AdvanceDominant,
        ..u0.clone()
    };
    run(&u0, spec, window, opts)
}

/// `x(t) = exp(∓∫_{t₁}^t u)`, with `x = 1` at and before `t₁`.
pub fn synthesize_solution<T: Real>(
    u: &GridFunction<T>,
    monotonicity: Monotonicity,
    t1: T,
) -> Result<GridFunction<T>, ConstructError> {
    if let Some((t, _)) = u.iter().find(|&(_, v)| !(v >= T::zero())) {
        return Err(ConstructError::NegativeGenerator { t: f64_of(t) });
    }
    let cum = u.cumulative();
    let sign = match monotonicity {
        Monotonicity::Decreasing => -T::one(),
        Monotonicity::Increasing => T::one(),
    };
    Ok(u.map(|t, _| {
        if t <= t1 {
            T::one()
        } else {
            (sign * cum.integral(t1, t)).exp()
        }
    }))
}

/// Where a starting function came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Starter<T> {
    /// `u₀ = a` (delay) or `u₀ = b` (advance).
    Coefficient,
    /// Constant `u₀ = λ` from the characteristic equation of the envelope.
    CharacteristicRoot(T),
    /// `u₀ = e·a` (delay) or `u₀ = e·b` (advance), valid when the 1/e integral bound holds.
    ScaledCoefficient,
    User,
}

impl<T: Real> fmt::Display for Starter<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Starter::Coefficient => f.write_str("coefficient"),
            Starter::CharacteristicRoot(l) => write!(f, "characteristic root {}", l),
            Starter::ScaledCoefficient => f.write_str("e * coefficient"),
            Starter::User => f.write_str("user"),
        }
    }
}

pub type StarterCandidate<T> = (Starter<T>, GeneratingCandidate<T>);

/// Standard generating functions, in the order they are tried.
pub fn starter_candidates<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    step: T,
    case: Case,
) -> Result<Vec<StarterCandidate<T>>, ConstructError> {
    let coef = |t: T| match case {
        Case::DelayDominant => spec.a(t),
        Case::AdvanceDominant => spec.b(t),
    };
    let mut out = Vec::new();
    let base = GridFunction::from_fn(window, step, |t| coef(t).max(T::zero()))?;
    out.push((
        Starter::Coefficient,
        GeneratingCandidate::new(base.clone(), case)?,
    ));
    let samples = window.samples_for_step(step);
    if let Ok(bounds) = extract_bounds(spec, window, samples) {
        let problem = match case {
            Case::DelayDominant => {
                CharProblem::delay_dominant(bounds.a2, bounds.b1, bounds.tau, bounds.sigma)
            }
            Case::AdvanceDominant => {
                CharProblem::advance_dominant(bounds.a1, bounds.b2, bounds.tau, bounds.sigma)
            }
        };
        if let Some(lambda) = positive_root_exists(&problem) {
            out.push((
                Starter::CharacteristicRoot(lambda),
                GeneratingCandidate::constant(window, step, lambda, case)?,
            ));
        }
    }
    let scaled = base.map(|_, v| v * T::E());
    out.push((
        Starter::ScaledCoefficient,
        GeneratingCandidate::new(scaled, case)?,
    ));
    Ok(out)
}

/// Picks the case from the dominance pattern on the window (delay first on
/// ties) and runs the first starter that satisfies the precondition; a user
/// starter, if given, is tried last.
pub fn construct<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    step: T,
    opts: &IterationOptions<T>,
    user: Option<GridFunction<T>>,
) -> Result<(Starter<T>, ConstructionResult<T>), ConstructError> {
    check_pattern(spec)?;
    let grid = GridFunction::from_fn(window, step, |t| spec.a(t) - spec.b(t))?;
    let case = if grid.min_value() >= -opts.tol {
        Case::DelayDominant
    } else if grid.max_value() <= opts.tol {
        Case::AdvanceDominant
    } else {
        let t = grid
            .iter()
            .find(|&(_, d)| d < -opts.tol)
            .map(|(t, _)| t)
            .unwrap_or(window.lo);
        return Err(ConstructError::DominanceViolated { t: f64_of(t) });
    };
    let mut starters = starter_candidates(spec, window, step, case)?;
    if let Some(u) = user {
        starters.push((Starter::User, GeneratingCandidate::new(u, case)?));
    }
    let mut last_err = ConstructError::NoStarter;
    for (label, cand) in starters {
        match run(&cand, spec, window, opts) {
            Ok(res) => return Ok((label, res)),
            Err(e @ ConstructError::NotSupersolution { .. }) => last_err = e,
            Err(e) => return Err(e),
        }
    }
    Err(last_err)
}
