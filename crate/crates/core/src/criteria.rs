//! Explicit sufficient conditions for nonoscillation, checked on a finite window.
//!
//! Every asymptotic hypothesis ("for t large", limsup, divergent integral) is
//! replaced by its windowed counterpart and the certificate carries a
//! [`Caveat::WindowLimited`]. Strict `< 1/e` tests compare against `1/e − μ`,
//! non-strict ones against `1/e + μ`.

use std::fmt;
use std::io;

use rayon::prelude::*;
use thiserror::Error;

use crate::charroots::{positive_root_exists, CharProblem};
use crate::gridfn::{GridError, GridFunction};
use crate::model::{extract_bounds, Bounds, BoundsError, ProblemSpec, SignPattern, Window};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[allow(non_camel_case_types)]
pub enum ConditionId {
    COR_1_2,
    COR_1_3,
    COR_1_4_REMARK,
    COR_1_5,
    COR_1_6,
    COR_2_2,
    COR_2_3,
    COR_2_4_REMARK,
    COR_2_5,
    THM_A_EXPLICIT,
    THM_B_EXPLICIT,
    COR_3_1_C1,
    COR_3_1_C2,
    SYS_30_FEASIBLE,
}

impl ConditionId {
    pub const ALL: [ConditionId; 14] = [
        ConditionId::COR_1_2,
        ConditionId::COR_1_3,
        ConditionId::COR_1_4_REMARK,
        ConditionId::COR_1_5,
        ConditionId::COR_1_6,
        ConditionId::COR_2_2,
        ConditionId::COR_2_3,
        ConditionId::COR_2_4_REMARK,
        ConditionId::COR_2_5,
        ConditionId::THM_A_EXPLICIT,
        ConditionId::THM_B_EXPLICIT,
        ConditionId::COR_3_1_C1,
        ConditionId::COR_3_1_C2,
        ConditionId::SYS_30_FEASIBLE,
    ];

    /// The sign pattern the condition is stated for.
    pub fn pattern(self) -> SignPattern {
        use ConditionId::*;
        match self {
            THM_A_EXPLICIT => SignPattern::BothPositive,
            THM_B_EXPLICIT => SignPattern::BothNegative,
            COR_3_1_C1 | COR_3_1_C2 | SYS_30_FEASIBLE => SignPattern::NegativeDelay,
            _ => SignPattern::PositiveDelay,
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    HoldsOnWindow,
    FailsOnWindow,
    Inapplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::HoldsOnWindow => "holds_on_window",
            Verdict::FailsOnWindow => "fails_on_window",
            Verdict::Inapplicable => "inapplicable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Caveat {
    WindowLimited,
    ExtrapolationFlagged,
    UnverifiedEquicontinuity,
}

impl fmt::Display for Caveat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Caveat::WindowLimited => "window-limited",
            Caveat::ExtrapolationFlagged => "extrapolation-flagged",
            Caveat::UnverifiedEquicontinuity => "unverified-equicontinuity",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness<T> {
    /// Generating function that satisfies the integral inequality.
    Generator(&'static str),
    /// Positive characteristic root.
    Root(T),
    /// Solution of the two-inequality system.
    Point { x: T, y: T },
    /// First node where the defining inequality fails, with its value.
    Violation { t: T, value: T },
    /// Windowed supremum of the tested expression.
    Supremum { value: T, at: T },
    /// Closed-form quantity compared against its bound.
    ClosedForm { value: T, bound: T },
    /// `∫(a − b)` at the checkpoints.
    Checkpoints(Vec<(T, T)>),
    /// Conditions whose conjunction is certified.
    Combined(Vec<ConditionId>),
}

impl<T: Real> fmt::Display for Witness<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Generator(g) => write!(f, "generator {g}"),
            Witness::Root(l) => write!(f, "lambda = {l}"),
            Witness::Point { x, y } => write!(f, "(x, y) = ({x}, {y})"),
            Witness::Violation { t, value } => write!(f, "violated at t = {t} (value {value})"),
            Witness::Supremum { value, at } => write!(f, "sup = {value} at t = {at}"),
            Witness::ClosedForm { value, bound } => {
                write!(f, "value {value} against bound {bound}")
            }
            Witness::Checkpoints(cs) => {
                let parts: Vec<String> = cs.iter().map(|(t, i)| format!("I({t}) = {i}")).collect();
                f.write_str(&parts.join(", "))
            }
            Witness::Combined(ids) => {
                let parts: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
                write!(f, "{} with divergent integral", parts.join(" + "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T> {
    pub id: ConditionId,
    pub verdict: Verdict,
    pub window: Window<T>,
    pub witness: Option<Witness<T>>,
    pub caveats: Vec<Caveat>,
    pub note: String,
}

impl<T: Real> Certificate<T> {
    fn new(id: ConditionId, verdict: Verdict, window: Window<T>) -> Self {
        Certificate {
            id,
            verdict,
            window,
            witness: None,
            caveats: Vec::new(),
            note: String::new(),
        }
    }

    fn inapplicable(id: ConditionId, window: Window<T>, reason: impl Into<String>) -> Self {
        Certificate {
            note: reason.into(),
            ..Self::new(id, Verdict::Inapplicable, window)
        }
    }

    fn with_witness(mut self, w: Witness<T>) -> Self {
        self.witness = Some(w);
        self
    }

    fn with_caveats(mut self, cs: &[Caveat]) -> Self {
        self.caveats.extend_from_slice(cs);
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::HoldsOnWindow
    }
}

impl<T: Real> fmt::Display for Certificate<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "condition: {}", self.id)?;
        writeln!(f, "verdict: {}", self.verdict)?;
        writeln!(f, "window: {}", self.window)?;
        match &self.witness {
            Some(w) => writeln!(f, "witness: {w}")?,
            None => writeln!(f, "witness: none")?,
        }
        let caveats: Vec<String> = self.caveats.iter().map(|c| c.to_string()).collect();
        writeln!(
            f,
            "caveats: {}",
            if caveats.is_empty() {
                "none".into()
            } else {
                caveats.join(", ")
            }
        )?;
        writeln!(
            f,
            "note: {}",
            if self.note.is_empty() {
                "-"
            } else {
                &self.note
            }
        )
    }
}

/// Line-oriented report, one block per certificate.
pub fn render_report<T: Real>(certs: &[Certificate<T>]) -> String {
    certs
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriteriaError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("resolution must be positive")]
    BadResolution,
    #[error("range [{0}, {1}] is empty")]
    EmptyRange(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriteriaOptions<T> {
    pub step: T,
    /// Margin for strict and non-strict comparisons against 1/e.
    pub mu: T,
    pub divergence_threshold: T,
    pub x_max: T,
    pub y_max: T,
    pub sweep_resolution: T,
    pub inversion_tol: T,
}

impl<T: Real> Default for CriteriaOptions<T> {
    fn default() -> Self {
        CriteriaOptions {
            step: T::lit(1e-3),
            mu: T::lit(1e-9),
            divergence_threshold: T::lit(5.0),
            x_max: T::lit(50.0),
            y_max: T::lit(50.0),
            sweep_resolution: T::lit(0.01),
            inversion_tol: T::lit(1e-10),
        }
    }
}

const WINDOWED: &[Caveat] = &[Caveat::WindowLimited];
const WINDOWED_EQUI: &[Caveat] = &[Caveat::WindowLimited, Caveat::UnverifiedEquicontinuity];

/// Problem data at the window nodes.
struct Sampled<T> {
    t: Vec<T>,
    a: Vec<T>,
    b: Vec<T>,
    g: Vec<T>,
    h: Vec<T>,
}

impl<T: Real> Sampled<T> {
    fn new(spec: &ProblemSpec<T>, window: Window<T>, step: T) -> Result<Self, CriteriaError> {
        let t: Vec<T> = GridFunction::from_fn(window, step, |_| T::zero())?
            .iter()
            .map(|(t, _)| t)
            .collect();
        Ok(Sampled {
            a: t.iter().map(|&s| spec.a(s)).collect(),
            b: t.iter().map(|&s| spec.b(s)).collect(),
            g: t.iter().map(|&s| spec.g(s)).collect(),
            h: t.iter().map(|&s| spec.h(s)).collect(),
            t,
        })
    }

    /// Smallest interval holding every node and deviated argument.
    fn span(&self) -> Window<T> {
        let lo = self.g.iter().fold(self.t[0], |m, &g| m.min(g));
        let hi = self
            .h
            .iter()
            .fold(*self.t.last().expect("nonempty"), |m, &h| m.max(h));
        Window::new(lo, hi)
    }

    /// First node where `a − b` (or `b − a`) is below `−μ`.
    fn dominance_violation(&self, delay: bool, mu: T) -> Option<(T, T)> {
        (0..self.t.len())
            .map(|i| {
                (
                    self.t[i],
                    if delay {
                        self.a[i] - self.b[i]
                    } else {
                        self.b[i] - self.a[i]
                    },
                )
            })
            .find(|&(_, d)| d < -mu)
    }
}

fn coefficient_grid<T: Real>(
    f: impl Fn(T) -> T,
    span: Window<T>,
    step: T,
) -> Result<GridFunction<T>, CriteriaError> {
    if span.is_empty() {
        // Single-point span: a two-node grid keeps every integral at zero length.
        return Ok(GridFunction::new(
            span.lo,
            step,
            vec![f(span.lo), f(span.lo)],
        )?);
    }
    Ok(GridFunction::from_fn(span, step, f)?)
}

/// `(sup, argmax)` over nodes.
fn sup_of<T: Real>(t: &[T], v: impl Iterator<Item = T>) -> (T, T) {
    t.iter()
        .zip(v)
        .fold((T::neg_infinity(), t[0]), |(m, at), (&s, x)| {
            if x > m {
                (x, s)
            } else {
                (m, at)
            }
        })
}

fn wrong_pattern<T: Real>(
    id: ConditionId,
    spec: &ProblemSpec<T>,
    window: Window<T>,
) -> Option<Certificate<T>> {
    let want = id.pattern();
    let have = spec.pattern();
    (have != want).then(|| {
        let (d1, d2) = want.signs();
        Certificate::inapplicable(
            id,
            window,
            format!(
                "stated for delta1 = {:+}, delta2 = {:+}; equation is {}",
                d1.as_int(),
                d2.as_int(),
                have
            ),
        )
    })
}

/// `b ≥ a [e^{∫_g^t a} − 1] e^{∫_t^h a}` with `a ≥ b`; generator `u = a`.
pub fn check_cor_1_2<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    generator_check(ConditionId::COR_1_2, spec, window, opts)
}

/// `a ≥ b [e^{∫_t^h b} − 1] e^{∫_g^t b}` with `b ≥ a`; generator `u = b`.
pub fn check_cor_2_2<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    generator_check(ConditionId::COR_2_2, spec, window, opts)
}

fn generator_check<T: Real>(
    id: ConditionId,
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    if let Some(c) = wrong_pattern(id, spec, window) {
        return Ok(c);
    }
    let delay = id == ConditionId::COR_1_2;
    let s = Sampled::new(spec, window, opts.step)?;
    if let Some((t, d)) = s.dominance_violation(delay, opts.mu) {
        let which = if delay {
            "a(t) >= b(t)"
        } else {
            "b(t) >= a(t)"
        };
        return Ok(Certificate::new(id, Verdict::FailsOnWindow, window)
            .with_witness(Witness::Violation { t, value: d })
            .with_caveats(WINDOWED)
            .with_note(format!("dominance {which} fails")));
    }
    let coef = if delay {
        coefficient_grid(|t| spec.a(t), s.span(), opts.step)?
    } else {
        coefficient_grid(|t| spec.b(t), s.span(), opts.step)?
    };
    let cum = coef.cumulative();
    let mut worst = (T::infinity(), window.lo);
    for i in 0..s.t.len() {
        let back = cum.integral(s.g[i], s.t[i]);
        let fwd = cum.integral(s.t[i], s.h[i]);
        let slack = if delay {
            s.b[i] - s.a[i] * (back.exp_sat() - T::one()) * fwd.exp_sat()
        } else {
            s.a[i] - s.b[i] * (fwd.exp_sat() - T::one()) * back.exp_sat()
        };
        if slack < -opts.mu {
            return Ok(Certificate::new(id, Verdict::FailsOnWindow, window)
                .with_witness(Witness::Violation {
                    t: s.t[i],
                    value: slack,
                })
                .with_caveats(WINDOWED)
                .with_note("integral inequality fails"));
        }
        if slack < worst.0 {
            worst = (slack, s.t[i]);
        }
    }
    Ok(Certificate::new(id, Verdict::HoldsOnWindow, window)
        .with_witness(Witness::Generator(if delay {
            "u = a(t)"
        } else {
            "u = b(t)"
        }))
        .with_caveats(WINDOWED)
        .with_note(format!("smallest slack {} at t = {}", worst.0, worst.1)))
}

/// Positive root of `−λ + a₂e^{λτ} − b₁e^{−λσ}` on the sampled envelope.
pub fn check_cor_1_3<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    root_check(ConditionId::COR_1_3, spec, window, opts)
}

/// Positive root of `λ + a₁e^{−λτ} − b₂e^{λσ}` on the sampled envelope.
pub fn check_cor_2_3<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    root_check(ConditionId::COR_2_3, spec, window, opts)
}

fn root_check<T: Real>(
    id: ConditionId,
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    if let Some(c) = wrong_pattern(id, spec, window) {
        return Ok(c);
    }
    let delay = id == ConditionId::COR_1_3;
    let s = Sampled::new(spec, window, opts.step)?;
    if s.dominance_violation(delay, T::zero()).is_some() {
        let which = if delay {
            "b <= b(t) <= a(t) <= a"
        } else {
            "a <= a(t) <= b(t) <= b"
        };
        return Ok(Certificate::inapplicable(
            id,
            window,
            format!("envelope ordering {which} fails"),
        ));
    }
    let bounds = extract_bounds(spec, window, s.t.len())?;
    let (lower, problem) = if delay {
        (
            bounds.b1,
            CharProblem::delay_dominant(bounds.a2, bounds.b1, bounds.tau, bounds.sigma),
        )
    } else {
        (
            bounds.a1,
            CharProblem::advance_dominant(bounds.a1, bounds.b2, bounds.tau, bounds.sigma),
        )
    };
    if !(lower > T::zero()) {
        let which = if delay { "b1" } else { "a1" };
        return Ok(Certificate::inapplicable(
            id,
            window,
            format!("envelope constant {which} must be positive"),
        ));
    }
    let envelope = format!(
        "a = {}, b = {}, tau = {}, sigma = {}",
        problem.a, problem.b, problem.tau, problem.sigma
    );
    Ok(match positive_root_exists(&problem) {
        Some(lambda) => Certificate::new(id, Verdict::HoldsOnWindow, window)
            .with_witness(Witness::Root(lambda))
            .with_caveats(WINDOWED)
            .with_note(envelope),
        None => Certificate::new(id, Verdict::FailsOnWindow, window)
            .with_caveats(WINDOWED)
            .with_note(format!("no positive root for {envelope}")),
    })
}

/// `sup ∫_g^t a ≤ 1/e` with `a ≥ b`; generator `u = e·a`.
pub fn check_cor_1_4_remark<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    remark_check(ConditionId::COR_1_4_REMARK, spec, window, opts)
}

/// `sup ∫_t^h b ≤ 1/e` with `b ≥ a`; generator `u = e·b`.
pub fn check_cor_2_4_remark<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    remark_check(ConditionId::COR_2_4_REMARK, spec, window, opts)
}

fn remark_check<T: Real>(
    id: ConditionId,
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    if let Some(c) = wrong_pattern(id, spec, window) {
        return Ok(c);
    }
    let delay = id == ConditionId::COR_1_4_REMARK;
    let s = Sampled::new(spec, window, opts.step)?;
    if let Some((t, d)) = s.dominance_violation(delay, opts.mu) {
        let which = if delay {
            "a(t) >= b(t)"
        } else {
            "b(t) >= a(t)"
        };
        return Ok(Certificate::new(id, Verdict::FailsOnWindow, window)
            .with_witness(Witness::Violation { t, value: d })
            .with_caveats(WINDOWED)
            .with_note(format!("dominance {which} fails")));
    }
    let (sup, at) = if delay {
        delay_integrals(spec, &s, opts.step)?.0
    } else {
        advance_integrals(spec, &s, opts.step)?.0
    };
    let bound = T::inv_e();
    let verdict = if sup <= bound + opts.mu {
        Verdict::HoldsOnWindow
    } else {
        Verdict::FailsOnWindow
    };
    let mut cert = Certificate::new(id, verdict, window)
        .with_witness(Witness::Supremum { value: sup, at })
        .with_caveats(WINDOWED);
    if verdict == Verdict::HoldsOnWindow {
        cert = cert.with_note(if delay {
            "generator u = e * a(t)"
        } else {
            "generator u = e * b(t)"
        });
    } else {
        cert = cert.with_note(format!("{sup} > 1/e"));
    }
    Ok(cert)
}

/// `(value, at)` of an extremum.
type Extremum<T> = (T, T);

/// `(sup, argmax)` and `(inf, argmin)` of `∫_{g(t)}^t a` over nodes.
fn delay_integrals<T: Real>(
    spec: &ProblemSpec<T>,
    s: &Sampled<T>,
    step: T,
) -> Result<(Extremum<T>, Extremum<T>), CriteriaError> {
    let grid = coefficient_grid(|t| spec.a(t), s.span(), step)?;
    let cum = grid.cumulative();
    let vals: Vec<T> = (0..s.t.len())
        .map(|i| cum.integral(s.g[i], s.t[i]))
        .collect();
    Ok(extremes(&s.t, &vals))
}

/// `(sup, argmax)` and `(inf, argmin)` of `∫_t^{h(t)} b` over nodes.
fn advance_integrals<T: Real>(
    spec: &ProblemSpec<T>,
    s: &Sampled<T>,
    step: T,
) -> Result<(Extremum<T>, Extremum<T>), CriteriaError> {
    let grid = coefficient_grid(|t| spec.b(t), s.span(), step)?;
    let cum = grid.cumulative();
    let vals: Vec<T> = (0..s.t.len())
        .map(|i| cum.integral(s.t[i], s.h[i]))
        .collect();
    Ok(extremes(&s.t, &vals))
}

fn extremes<T: Real>(t: &[T], v: &[T]) -> ((T, T), (T, T)) {
    let sup = sup_of(t, v.iter().copied());
    let (neg_inf, at) = sup_of(t, v.iter().map(|&x| -x));
    (sup, (-neg_inf, at))
}

/// Windowed integrals of the two sub-equations `x' + a x(g) = 0` and
/// `x' − b x(h) = 0`. A lower bound above `1/e` means the classical 1/e
/// tests cannot certify the sub-equation (all of its solutions oscillate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationNote<T> {
    pub delay_sup: T,
    pub delay_inf: T,
    pub advance_sup: T,
    pub advance_inf: T,
}

impl<T: Real> OscillationNote<T> {
    pub fn delay_subequation_oscillates(&self) -> bool {
        self.delay_inf > T::inv_e()
    }

    pub fn advance_subequation_oscillates(&self) -> bool {
        self.advance_inf > T::inv_e()
    }
}

impl<T: Real> fmt::Display for OscillationNote<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cmp = |v: T| if v > T::inv_e() { ">" } else { "<=" };
        write!(
            f,
            "delay sub-equation: inf int_g^t a = {} {} 1/e; advance sub-equation: inf int_t^h b = {} {} 1/e",
            self.delay_inf,
            cmp(self.delay_inf),
            self.advance_inf,
            cmp(self.advance_inf)
        )
    }
}

pub fn oscillation_note<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<OscillationNote<T>, CriteriaError> {
    let s = Sampled::new(spec, window, opts.step)?;
    let (dsup, dinf) = delay_integrals(spec, &s, opts.step)?;
    let (asup, ainf) = advance_integrals(spec, &s, opts.step)?;
    Ok(OscillationNote {
        delay_sup: dsup.0,
        delay_inf: dinf.0,
        advance_sup: asup.0,
        advance_inf: ainf.0,
    })
}

/// Windowed `sup ∫_{g(t)}^t a(s) e^{∫_{g(s)}^s b} ds < 1/e` for `x' + a x(g) + b x(h) = 0`.
pub fn check_thm_a_explicit<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    nested_check(ConditionId::THM_A_EXPLICIT, spec, window, opts)
}

/// Windowed `sup ∫_t^{h(t)} b(s) e^{∫_s^{h(s)} a} ds < 1/e` for `x' − a x(g) − b x(h) = 0`.
pub fn check_thm_b_explicit<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    nested_check(ConditionId::THM_B_EXPLICIT, spec, window, opts)
}

fn nested_check<T: Real>(
    id: ConditionId,
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    if let Some(c) = wrong_pattern(id, spec, window) {
        return Ok(c);
    }
    let s = Sampled::new(spec, window, opts.step)?;
    let span = s.span();
    // The inner integral needs the arguments of the outer quadrature nodes.
    let outer = coefficient_grid(|_| T::zero(), span, opts.step)?;
    let (inner_lo, inner_hi) = outer.iter().fold((span.lo, span.hi), |(lo, hi), (t, _)| {
        (lo.min(spec.g(t)), hi.max(spec.h(t)))
    });
    let wide = Window::new(inner_lo, inner_hi);
    let vals: Vec<T> = if id == ConditionId::THM_A_EXPLICIT {
        let b = coefficient_grid(|t| spec.b(t), wide, opts.step)?;
        let bc = b.cumulative();
        let integrand = outer.map(|t, _| spec.a(t) * bc.integral(spec.g(t), t).exp_sat());
        let ic = integrand.cumulative();
        (0..s.t.len())
            .map(|i| ic.integral(s.g[i], s.t[i]))
            .collect()
    } else {
        let a = coefficient_grid(|t| spec.a(t), wide, opts.step)?;
        let ac = a.cumulative();
        let integrand = outer.map(|t, _| spec.b(t) * ac.integral(t, spec.h(t)).exp_sat());
        let ic = integrand.cumulative();
        (0..s.t.len())
            .map(|i| ic.integral(s.t[i], s.h[i]))
            .collect()
    };
    let (sup, at) = sup_of(&s.t, vals.into_iter());
    let verdict = if sup <= T::inv_e() - opts.mu {
        Verdict::HoldsOnWindow
    } else {
        Verdict::FailsOnWindow
    };
    Ok(Certificate::new(id, verdict, window)
        .with_witness(Witness::Supremum { value: sup, at })
        .with_caveats(WINDOWED_EQUI)
        .with_note(if verdict == Verdict::HoldsOnWindow {
            "sup < 1/e"
        } else {
            "sup >= 1/e"
        }))
}

/// Whether `∫_{t₁}^{T'} f` grows across the quarter checkpoints and ends above the threshold.
pub fn check_divergence_grid<T: Real>(
    id: ConditionId,
    integrand: &GridFunction<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    let cum = integrand.cumulative();
    let checkpoints: Vec<(T, T)> = (1..=4)
        .map(|k| {
            let t = window.lo + window.len() * T::from_count(k) / T::lit(4.0);
            (t, cum.integral(window.lo, t))
        })
        .collect();
    let increasing =
        checkpoints.windows(2).all(|w| w[1].1 > w[0].1) && checkpoints[0].1 > T::zero();
    let last = checkpoints[3].1;
    let holds = increasing && last > opts.divergence_threshold;
    let note = if holds {
        format!("I(T) = {last} exceeds {}", opts.divergence_threshold)
    } else if !increasing {
        "integral does not grow across checkpoints".to_string()
    } else {
        format!(
            "I(T) = {last} does not exceed {}",
            opts.divergence_threshold
        )
    };
    Ok(Certificate::new(
        id,
        if holds {
            Verdict::HoldsOnWindow
        } else {
            Verdict::FailsOnWindow
        },
        window,
    )
    .with_witness(Witness::Checkpoints(checkpoints))
    .with_caveats(WINDOWED)
    .with_note(note))
}

/// Divergence of `∫(a − b)` (`case` = COR_1_5) or `∫(b − a)` (COR_2_5).
pub fn check_divergence<T: Real>(
    id: ConditionId,
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Certificate<T>, CriteriaError> {
    if let Some(c) = wrong_pattern(id, spec, window) {
        return Ok(c);
    }
    let delay = id != ConditionId::COR_2_5;
    let s = Sampled::new(spec, window, opts.step)?;
    if s.dominance_violation(delay, opts.mu).is_some() {
        let which = if delay {
            "a(t) >= b(t)"
        } else {
            "b(t) >= a(t)"
        };
        return Ok(Certificate::inapplicable(
            id,
            window,
            format!("dominance {which} fails"),
        ));
    }
    let values: Vec<T> = (0..s.t.len())
        .map(|i| {
            if delay {
                s.a[i] - s.b[i]
            } else {
                s.b[i] - s.a[i]
            }
        })
        .collect();
    let grid = GridFunction::new(
        s.t[0],
        (s.t[s.t.len() - 1] - s.t[0]) / T::from_count(s.t.len() - 1),
        values,
    )?;
    check_divergence_grid(id, &grid, window, opts)
}

/// Both closed-form conditions for `x' − a x(g) + b x(h) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cor31<T> {
    pub c1: Certificate<T>,
    pub c2: Certificate<T>,
}

impl<T: Real> Cor31<T> {
    pub fn holds(&self) -> bool {
        self.c1.holds() || self.c2.holds()
    }
}

/// `b₂ < a₁, 0 < a₂ − b₁ < ln(a₁/b₂)/(τ+σ)` or the mirror with the roles swapped.
pub fn check_cor_3_1<T: Real>(bounds: &Bounds<T>) -> Cor31<T> {
    let w = bounds.window;
    let positive = [bounds.a1, bounds.a2, bounds.b1, bounds.b2]
        .iter()
        .all(|&v| v > T::zero());
    let span = bounds.tau + bounds.sigma;
    if !positive || !(span > T::zero()) {
        let why = if positive {
            "tau + sigma must be positive"
        } else {
            "envelope constants must be positive"
        };
        return Cor31 {
            c1: Certificate::inapplicable(ConditionId::COR_3_1_C1, w, why),
            c2: Certificate::inapplicable(ConditionId::COR_3_1_C2, w, why),
        };
    }
    let cond =
        |id, (lo_name, strong_lo): (&str, T), (hi_name, weak_hi): (&str, T), top: T, bottom: T| {
            // strong_lo > weak_hi first, then 0 < top − bottom < ln(strong_lo/weak_hi)/span
            let cert = |holds: bool| {
                Certificate::new(
                    id,
                    if holds {
                        Verdict::HoldsOnWindow
                    } else {
                        Verdict::FailsOnWindow
                    },
                    w,
                )
                .with_caveats(WINDOWED_EQUI)
            };
            if !(weak_hi < strong_lo) {
                return cert(false).with_note(format!(
                    "needs {lo_name} > {hi_name}, got {strong_lo} <= {weak_hi}"
                ));
            }
            let gap = top - bottom;
            let bound = (strong_lo / weak_hi).ln() / span;
            let holds = gap > T::zero() && gap < bound;
            let note = if !(gap > T::zero()) {
                format!("difference {gap} is not positive")
            } else if holds {
                format!("0 < {gap} < {bound}")
            } else {
                format!("{gap} >= {bound}")
            };
            cert(holds)
                .with_witness(Witness::ClosedForm { value: gap, bound })
                .with_note(note)
        };
    Cor31 {
        c1: cond(
            ConditionId::COR_3_1_C1,
            ("a1", bounds.a1),
            ("b2", bounds.b2),
            bounds.a2,
            bounds.b1,
        ),
        c2: cond(
            ConditionId::COR_3_1_C2,
            ("b1", bounds.b1),
            ("a2", bounds.a2),
            bounds.b2,
            bounds.a1,
        ),
    }
}

/// `(G(y), F(x))` with `G(y) = a₂e^{yτ} − b₁e^{−yσ}` and `F(x) = b₂e^{xσ} − a₁e^{−xτ}`.
/// `(x, y)` solves the system when `G(y) ≤ x` and `F(x) ≤ y`.
pub fn sys30_constraints<T: Real>(bounds: &Bounds<T>, x: T, y: T) -> (T, T) {
    let g = bounds.a2 * (y * bounds.tau).exp_sat() - bounds.b1 * (-y * bounds.sigma).exp();
    let f = bounds.b2 * (x * bounds.sigma).exp_sat() - bounds.a1 * (-x * bounds.tau).exp();
    (g, f)
}

fn sys30_slack<T: Real>(bounds: &Bounds<T>, x: T, y: T) -> T {
    let (g, f) = sys30_constraints(bounds, x, y);
    (x - g).min(y - f)
}

/// Smallest `y ∈ [0, y_max]` with `G(y) ≥ x`, if any; `G` is strictly increasing.
fn invert_g<T: Real>(bounds: &Bounds<T>, x: T, y_max: T, tol: T) -> Option<T> {
    let g = |y: T| sys30_constraints(bounds, T::zero(), y).0;
    if g(T::zero()) >= x {
        return Some(T::zero());
    }
    if g(y_max) < x {
        return None;
    }
    let (mut lo, mut hi) = (T::zero(), y_max);
    while hi - lo > tol {
        let mid = (lo + hi) / T::lit(2.0);
        if g(mid) < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Positive solution of the system, by the root of `G⁻¹ − F` when it
/// brackets, otherwise by a column sweep of the search box.
pub fn check_sys30<T: Real>(bounds: &Bounds<T>, opts: &CriteriaOptions<T>) -> Certificate<T> {
    let id = ConditionId::SYS_30_FEASIBLE;
    let w = bounds.window;
    if ![bounds.a1, bounds.a2, bounds.b1, bounds.b2]
        .iter()
        .all(|&v| v > T::zero())
    {
        return Certificate::inapplicable(id, w, "envelope constants must be positive");
    }
    let found = |x: T, y: T, route: &str| {
        Certificate::new(id, Verdict::HoldsOnWindow, w)
            .with_witness(Witness::Point { x, y })
            .with_caveats(WINDOWED_EQUI)
            .with_note(format!("{route}; slack {}", sys30_slack(bounds, x, y)))
    };
    let accept =
        |x: T, y: T| x > T::zero() && y > T::zero() && sys30_slack(bounds, x, y) >= T::lit(-1e-9);

    // Route (i): h(x) = G⁻¹(x) − F(x) on [max(G(0), 0), X_max].
    let f = |x: T| sys30_constraints(bounds, x, T::zero()).1;
    let x_lo = sys30_constraints(bounds, T::zero(), T::zero())
        .0
        .max(T::zero());
    let h = |x: T| invert_g(bounds, x, opts.y_max, opts.inversion_tol).map(|y| (y, y - f(x)));
    if x_lo < opts.x_max {
        if let (Some((_, h_lo)), Some((y_hi, h_hi))) = (h(x_lo), h(opts.x_max)) {
            if h_hi >= T::zero() && accept(opts.x_max, y_hi) {
                return found(opts.x_max, y_hi, "bracket route");
            }
            if h_lo > T::zero() {
                let (mut lo, mut hi) = (x_lo, opts.x_max);
                while hi - lo > opts.inversion_tol {
                    let mid = (lo + hi) / T::lit(2.0);
                    match h(mid) {
                        Some((_, v)) if v >= T::zero() => lo = mid,
                        _ => hi = mid,
                    }
                }
                if let Some((y, _)) = h(lo) {
                    if accept(lo, y) {
                        return found(lo, y, "bracket route");
                    }
                }
            }
        }
    }

    // Route (ii): on each grid column the feasible y form an interval starting at max(F(x), res).
    let res = opts.sweep_resolution;
    let columns = (opts.x_max / res).floor().to_usize().unwrap_or(0);
    let rows = (opts.y_max / res).floor().to_usize().unwrap_or(0);
    let feasible: Vec<T> = (1..=columns)
        .filter_map(|i| {
            let x = res * T::from_count(i);
            let k = (f(x) / res)
                .ceil()
                .max(T::one())
                .to_usize()
                .filter(|&k| k <= rows)?;
            let y = res * T::from_count(k);
            (sys30_constraints(bounds, x, y).0 <= x).then_some(x)
        })
        .collect();
    if !feasible.is_empty() {
        // Centre of the feasible y-interval in the middle feasible column.
        let x = feasible[feasible.len() / 2];
        let y_lo = f(x).max(T::zero());
        let y_hi = invert_g(bounds, x, opts.y_max, opts.inversion_tol).unwrap_or(opts.y_max);
        let y = (y_lo + y_hi) / T::lit(2.0);
        if accept(x, y) {
            return found(x, y, "grid sweep");
        }
        let k = (f(x) / res).ceil().max(T::one());
        return found(x, res * k, "grid sweep");
    }
    Certificate::new(id, Verdict::FailsOnWindow, w)
        .with_caveats(WINDOWED_EQUI)
        .with_note(format!(
            "no solution in (0, {}] x (0, {}] at resolution {}",
            opts.x_max, opts.y_max, res
        ))
}

/// Runs every condition; those stated for another sign pattern come back
/// inapplicable with the reason.
pub fn check_all<T: Real>(
    spec: &ProblemSpec<T>,
    window: Window<T>,
    opts: &CriteriaOptions<T>,
) -> Result<Vec<Certificate<T>>, CriteriaError> {
    use ConditionId::*;
    let c12 = check_cor_1_2(spec, window, opts)?;
    let c13 = check_cor_1_3(spec, window, opts)?;
    let c14 = check_cor_1_4_remark(spec, window, opts)?;
    let c22 = check_cor_2_2(spec, window, opts)?;
    let c23 = check_cor_2_3(spec, window, opts)?;
    let c24 = check_cor_2_4_remark(spec, window, opts)?;
    let div1 = check_divergence(COR_1_5, spec, window, opts)?;
    let div2 = check_divergence(COR_2_5, spec, window, opts)?;
    let c15 = combine(COR_1_5, div1.clone(), &[&c12, &c13, &c14]);
    let c16 = combine(COR_1_6, div1, &[&c14]);
    let c25 = combine(COR_2_5, div2, &[&c22, &c23, &c24]);
    let thm_a = check_thm_a_explicit(spec, window, opts)?;
    let thm_b = check_thm_b_explicit(spec, window, opts)?;
    let (c31_1, c31_2, sys) = match wrong_pattern(SYS_30_FEASIBLE, spec, window) {
        Some(_) => (
            wrong_pattern(COR_3_1_C1, spec, window).expect("same pattern"),
            wrong_pattern(COR_3_1_C2, spec, window).expect("same pattern"),
            wrong_pattern(SYS_30_FEASIBLE, spec, window).expect("same pattern"),
        ),
        None => {
            let bounds = extract_bounds(spec, window, window.samples_for_step(opts.step))?;
            let c31 = check_cor_3_1(&bounds);
            (c31.c1, c31.c2, check_sys30(&bounds, opts))
        }
    };
    Ok(vec![
        c12, c13, c14, c15, c16, c22, c23, c24, c25, thm_a, thm_b, c31_1, c31_2, sys,
    ])
}

/// Divergence together with any one of the listed inequality certificates.
fn combine<T: Real>(
    id: ConditionId,
    divergence: Certificate<T>,
    any_of: &[&Certificate<T>],
) -> Certificate<T> {
    let mut out = Certificate { id, ..divergence };
    if out.verdict != Verdict::HoldsOnWindow {
        return out;
    }
    match any_of.iter().find(|c| c.holds()) {
        Some(c) => {
            out.note = format!("{}; inequality via {}", out.note, c.id);
            out.witness = Some(Witness::Combined(vec![c.id]));
        }
        None => {
            out.verdict = Verdict::FailsOnWindow;
            let ids: Vec<String> = any_of.iter().map(|c| c.id.to_string()).collect();
            out.note = match ids.as_slice() {
                [one] => format!("integral diverges on the window but {one} does not hold"),
                _ => format!(
                    "integral diverges on the window but none of {} holds",
                    ids.join(", ")
                ),
            };
        }
    }
    out
}

/// Axes of a feasibility sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionAxes {
    /// Fixed envelope, sweep the unknowns `(x, y)` of the system.
    InequalityVariables,
    /// Autonomous coefficients `(a, b)` with fixed `τ`, `σ`; each cell runs [`check_sys30`].
    Coefficients,
}

impl RegionAxes {
    pub fn names(self) -> (&'static str, &'static str) {
        match self {
            RegionAxes::InequalityVariables => ("x", "y"),
            RegionAxes::Coefficients => ("a", "b"),
        }
    }
}

/// Cells with `aτ + bσ < 1/e` against those without, by feasibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LineComparison {
    pub below_feasible: usize,
    pub below_infeasible: usize,
    pub above_feasible: usize,
    pub above_infeasible: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityRegion<T> {
    pub axes: RegionAxes,
    pub axis1: Vec<T>,
    pub axis2: Vec<T>,
    pub resolution: T,
    /// `feasible[i][j]` for `(axis1[i], axis2[j])`.
    pub feasible: Vec<Vec<bool>>,
    /// Coefficient mode only: the `b` on the line `aτ + bσ = 1/e` for each `axis1` value.
    pub reference: Option<Vec<T>>,
    pub comparison: Option<LineComparison>,
}

impl<T: Real> FeasibilityRegion<T> {
    pub fn is_feasible(&self, i: usize, j: usize) -> bool {
        self.feasible[i][j]
    }

    pub fn count_feasible(&self) -> usize {
        self.feasible.iter().flatten().filter(|&&f| f).count()
    }

    /// Columns `axis1, axis2, feasible[, reference]`.
    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let (n1, n2) = self.axes.names();
        let mut header = vec![n1, n2, "feasible"];
        if self.reference.is_some() {
            header.push("reference");
        }
        out.write_record(&header)?;
        for (i, &v1) in self.axis1.iter().enumerate() {
            for (j, &v2) in self.axis2.iter().enumerate() {
                let mut row = vec![
                    v1.to_string(),
                    v2.to_string(),
                    u8::from(self.feasible[i][j]).to_string(),
                ];
                if let Some(r) = &self.reference {
                    row.push(r[i].to_string());
                }
                out.write_record(&row)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn axis<T: Real>(lo: T, hi: T, res: T) -> Result<Vec<T>, CriteriaError> {
    if !(hi >= lo) {
        return Err(CriteriaError::EmptyRange(
            lo.to_f64().unwrap_or(f64::NAN),
            hi.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let n = ((hi - lo) / res + T::lit(1e-9))
        .floor()
        .to_usize()
        .unwrap_or(0);
    Ok((0..=n).map(|k| lo + res * T::from_count(k)).collect())
}

/// Feasibility matrix over a rectangular parameter grid, rows in parallel.
/// In coefficient mode only `tau` and `sigma` of `template` are used.
pub fn sweep_region<T: Real>(
    template: &Bounds<T>,
    axes: RegionAxes,
    range1: (T, T),
    range2: (T, T),
    resolution: T,
    opts: &CriteriaOptions<T>,
) -> Result<FeasibilityRegion<T>, CriteriaError> {
    if !(resolution > T::zero()) {
        return Err(CriteriaError::BadResolution);
    }
    let axis1 = axis(range1.0, range1.1, resolution)?;
    let axis2 = axis(range2.0, range2.1, resolution)?;
    let feasible: Vec<Vec<bool>> = axis1
        .par_iter()
        .map(|&v1| {
            axis2
                .iter()
                .map(|&v2| match axes {
                    RegionAxes::InequalityVariables => {
                        v1 > T::zero()
                            && v2 > T::zero()
                            && sys30_slack(template, v1, v2) >= T::zero()
                    }
                    RegionAxes::Coefficients => {
                        let b = Bounds::autonomous(v1, v2, template.tau, template.sigma);
                        check_sys30(&b, opts).holds()
                    }
                })
                .collect()
        })
        .collect();
    let (reference, comparison) = match axes {
        RegionAxes::InequalityVariables => (None, None),
        RegionAxes::Coefficients => {
            let line: Vec<T> = axis1
                .iter()
                .map(|&a| (T::inv_e() - template.tau * a) / template.sigma)
                .collect();
            let mut cmp = LineComparison::default();
            for (i, &a) in axis1.iter().enumerate() {
                for (j, &b) in axis2.iter().enumerate() {
                    let below = a * template.tau + b * template.sigma < T::inv_e();
                    match (below, feasible[i][j]) {
                        (true, true) => cmp.below_feasible += 1,
                        (true, false) => cmp.below_infeasible += 1,
                        (false, true) => cmp.above_feasible += 1,
                        (false, false) => cmp.above_infeasible += 1,
                    }
                }
            }
            (Some(line), Some(cmp))
        }
    };
    Ok(FeasibilityRegion {
        axes,
        axis1,
        axis2,
        resolution,
        feasible,
        reference,
        comparison,
    })
}
