//! Forward integration of the mixed initial-value problem by waveform
//! relaxation.
//!
//! Each sweep marches Heun's method across `[t₀, T]`. Deviated arguments at or
//! behind the node being evaluated read the current sweep (or `φ` before `t₀`);
//! arguments ahead of it read the previous sweep, continued past `T` by a
//! [`TerminalClosure`]. Sweeps repeat until the largest node change drops to
//! the tolerance, with damping when successive corrections alternate in sign.
//! Convergence is reported, never assumed: nothing here claims uniqueness.

use std::fmt;
use std::io;

use thiserror::Error;

use crate::gridfn::{GridError, GridFunction};
use crate::model::{CoefficientExpr, Ivp, ProblemSpec, Window};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulateError {
    #[error("horizon must exceed the start time")]
    BadHorizon,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("t_from = {0} lies outside the trajectory")]
    OutsideDomain(f64),
}

/// How the previous sweep is continued past `T` when an advanced argument reads there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalClosure {
    /// `x(s) = x(T)`.
    Constant,
    /// `x(s) = x(T) (x(T)/x(T − step))^{(s − T)/step}`, exact for exponentials.
    /// Falls back to constant when the last two nodes do not share a strict sign.
    LogLinear,
    /// Constant while the sweeps settle, log-linear once corrections fall below
    /// `1e−4 · max(|x₀|, 1)`; back to constant for good if they then grow tenfold.
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions<T> {
    pub step: T,
    /// `None` means `1e−10 · max(|x₀|, 1)`.
    pub tol: Option<T>,
    pub max_sweeps: usize,
    /// Fixed weight `ω` in `x ← x + ω (sweep(x) − x)`. `None` starts at 1 and
    /// lowers `ω` whenever successive sweep corrections alternate in sign.
    pub relaxation: Option<T>,
    pub closure: TerminalClosure,
}

impl<T: Real> Default for RelaxOptions<T> {
    fn default() -> Self {
        RelaxOptions {
            step: T::lit(1e-3),
            tol: None,
            max_sweeps: 200,
            relaxation: None,
            closure: TerminalClosure::Hybrid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub x: GridFunction<T>,
    /// Sweeps computed, including the one that confirmed convergence.
    pub relaxation_iterations: usize,
    /// Largest node change `|sweep(x) − x|` in the last sweep, before damping.
    pub relaxation_residual: T,
    pub equation_residual: T,
    pub converged: bool,
    /// Undamped node change after every sweep.
    pub sweep_changes: Vec<T>,
    /// Final damping weight.
    pub relaxation_weight: T,
    /// The step exceeds the smallest delay, so some delayed reads use the predictor.
    pub step_exceeds_delay: bool,
    /// Largest delay, excluded on the left of residuals and classification.
    pub left_margin: T,
    /// Largest advance, excluded on the right.
    pub right_margin: T,
}

impl<T: Real> Trajectory<T> {
    /// Wraps an externally computed grid function, for classification and residuals.
    pub fn from_grid(x: GridFunction<T>, left_margin: T, right_margin: T) -> Self {
        Trajectory {
            x,
            relaxation_iterations: 0,
            relaxation_residual: T::zero(),
            equation_residual: T::nan(),
            converged: true,
            sweep_changes: Vec::new(),
            relaxation_weight: T::one(),
            step_exceeds_delay: false,
            left_margin,
            right_margin,
        }
    }

    /// Whether the node change shrank after every sweep.
    pub fn contraction_monotone(&self) -> bool {
        self.sweep_changes.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x"])?;
        for (t, x) in self.x.iter() {
            out.write_record([t.to_string(), x.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary(&self, class: TrajectoryClass) -> String {
        let mut s = String::new();
        s.push_str(&format!("converged: {}\n", self.converged));
        s.push_str(&format!("sweeps: {}\n", self.relaxation_iterations));
        s.push_str(&format!(
            "relaxation_residual: {:e}\n",
            self.relaxation_residual
        ));
        s.push_str(&format!(
            "equation_residual: {:e}\n",
            self.equation_residual
        ));
        s.push_str(&format!(
            "contraction_monotone: {}\n",
            self.contraction_monotone()
        ));
        s.push_str(&format!("relaxation_weight: {}\n", self.relaxation_weight));
        if self.step_exceeds_delay {
            s.push_str("flag: step exceeds smallest delay\n");
        }
        s.push_str(&format!("classification: {}\n", class));
        s
    }
}

/// Samples of the problem data at the grid nodes.
struct Nodes<T> {
    t: Vec<T>,
    a: Vec<T>,
    b: Vec<T>,
    g: Vec<T>,
    h: Vec<T>,
}

/// Reads `x(s)` during a sweep that has fixed nodes `0..=known`, with an
/// optional predicted value at `known + 1`.
struct SweepView<'a, T> {
    t0: T,
    step: T,
    phi: &'a CoefficientExpr<T>,
    cur: &'a [T],
    known: usize,
    predicted: Option<T>,
    prev: &'a GridFunction<T>,
    closure: TerminalClosure,
}

impl<T: Real> SweepView<'_, T> {
    /// `x(s)` as seen from node time `at`.
    fn read(&self, s: T, at: T) -> T {
        if s < self.t0 {
            return self.phi.eval(s);
        }
        if s > at {
            return continued(self.prev, s, self.closure);
        }
        let last = self.known + usize::from(self.predicted.is_some());
        let value = |i: usize| {
            if i <= self.known {
                self.cur[i]
            } else {
                self.predicted.expect("predictor")
            }
        };
        let pos = ((s - self.t0) / self.step).to_f64().unwrap_or(0.0).max(0.0);
        let i = (pos.floor() as usize).min(last);
        if i == last {
            return value(last);
        }
        let frac = T::lit(pos - i as f64);
        value(i) + (value(i + 1) - value(i)) * frac
    }
}

fn continued<T: Real>(x: &GridFunction<T>, s: T, closure: TerminalClosure) -> T {
    let end = x.t_end();
    if s <= end {
        return x.value_at(s);
    }
    let v = x.values();
    let (last, before) = (v[v.len() - 1], v[v.len() - 2]);
    match closure {
        TerminalClosure::LogLinear if last * before > T::zero() => {
            last * (last / before).powf((s - end) / x.step())
        }
        _ => last,
    }
}

fn derivative<T: Real>(
    spec: &ProblemSpec<T>,
    n: &Nodes<T>,
    j: usize,
    view: &SweepView<'_, T>,
) -> T {
    let t = n.t[j];
    let d1 = spec.delta1.value::<T>();
    let d2 = spec.delta2.value::<T>();
    -(d1 * n.a[j] * view.read(n.g[j], t)) - d2 * n.b[j] * view.read(n.h[j], t)
}

/// Waveform relaxation on `[t₀, T]`.
pub fn relax<T: Real>(
    ivp: &Ivp<T>,
    t_end: T,
    opts: &RelaxOptions<T>,
) -> Result<Trajectory<T>, SimulateError> {
    let spec = &ivp.spec;
    let t0 = spec.t0;
    if !(t_end > t0) {
        return Err(SimulateError::BadHorizon);
    }
    let tol = opts
        .tol
        .unwrap_or_else(|| T::lit(1e-10) * ivp.x0.abs().max(T::one()));
    let mut prev = GridFunction::from_fn(Window::new(t0, t_end), opts.step, |_| ivp.x0)?;
    let step = prev.step();
    let t: Vec<T> = prev.iter().map(|(t, _)| t).collect();
    let nodes = Nodes {
        a: t.iter().map(|&s| spec.a(s)).collect(),
        b: t.iter().map(|&s| spec.b(s)).collect(),
        g: t.iter().map(|&s| spec.g(s)).collect(),
        h: t.iter().map(|&s| spec.h(s)).collect(),
        t,
    };
    let n = nodes.t.len();
    let left_margin = (0..n)
        .map(|i| nodes.t[i] - nodes.g[i])
        .fold(T::zero(), T::max);
    let right_margin = (0..n)
        .map(|i| nodes.h[i] - nodes.t[i])
        .fold(T::zero(), T::max);
    let min_delay = (0..n)
        .map(|i| nodes.t[i] - nodes.g[i])
        .fold(T::infinity(), T::min);
    // Without a forward-looking term one sweep is already exact.
    let coupled = (0..n).any(|i| nodes.b[i] != T::zero() && nodes.h[i] > nodes.t[i]);

    let mut cur = vec![T::zero(); n];
    let mut changes = Vec::new();
    let mut converged = false;
    let mut omega = opts.relaxation.unwrap_or_else(T::one);
    let mut last_correction: Option<Vec<T>> = None;
    let mut last_ratio: Option<T> = None;
    let mut closure = match opts.closure {
        TerminalClosure::Hybrid => TerminalClosure::Constant,
        c => c,
    };
    let switch_at = T::lit(1e-4) * ivp.x0.abs().max(T::one());
    let mut switched: Option<T> = None;
    let half = T::lit(0.5);
    while changes.len() < opts.max_sweeps {
        cur[0] = ivp.x0;
        for i in 0..n - 1 {
            let mut view = SweepView {
                t0,
                step,
                phi: &ivp.phi,
                cur: &cur,
                known: i,
                predicted: None,
                prev: &prev,
                closure,
            };
            let f0 = derivative(spec, &nodes, i, &view);
            view.predicted = Some(cur[i] + step * f0);
            let f1 = derivative(spec, &nodes, i + 1, &view);
            cur[i + 1] = cur[i] + half * step * (f0 + f1);
        }
        let correction: Vec<T> = cur
            .iter()
            .zip(prev.values())
            .map(|(&c, &p)| c - p)
            .collect();
        let change = correction.iter().fold(T::zero(), |m, d| m.max(d.abs()));
        changes.push(change);
        if !change.is_finite() || correction.iter().any(|d| !d.is_finite()) {
            prev = prev.with_values(cur.clone())?;
            break;
        }
        if !coupled || change <= tol {
            prev = prev.with_values(cur.clone())?;
            converged = true;
            break;
        }
        if opts.closure == TerminalClosure::Hybrid {
            match switched {
                None if change <= switch_at => {
                    closure = TerminalClosure::LogLinear;
                    switched = Some(change);
                }
                Some(c) if closure == TerminalClosure::LogLinear && change > T::lit(10.0) * c => {
                    closure = TerminalClosure::Constant;
                }
                _ => {}
            }
        }
        if opts.relaxation.is_none() {
            if let Some(old) = &last_correction {
                let ratio = correction_ratio(old, &correction);
                if let (Some(r0), Some(r1)) = (last_ratio, ratio) {
                    // Only trust a ratio that has settled.
                    if (r1 - r0).abs() <= T::lit(0.05) * r1.abs() {
                        omega = adapt_weight(omega, r1);
                    }
                }
                last_ratio = ratio;
            }
        }
        let next: Vec<T> = prev
            .values()
            .iter()
            .zip(&correction)
            .map(|(&p, &d)| p + omega * d)
            .collect();
        prev = prev.with_values(next)?;
        last_correction = Some(correction);
    }
    let mut tr = Trajectory {
        relaxation_iterations: changes.len(),
        relaxation_residual: *changes.last().expect("at least one sweep"),
        equation_residual: T::nan(),
        converged,
        sweep_changes: changes,
        relaxation_weight: omega,
        step_exceeds_delay: min_delay < step,
        left_margin,
        right_margin,
        x: prev,
    };
    tr.equation_residual = residual(&tr, spec);
    Ok(tr)
}

/// `⟨new, old⟩ / ⟨old, old⟩`, the observed growth of the sweep correction.
fn correction_ratio<T: Real>(old: &[T], new: &[T]) -> Option<T> {
    let dot: T = old.iter().zip(new).map(|(&a, &b)| a * b).sum();
    let norm: T = old.iter().map(|&a| a * a).sum();
    (norm > T::zero() && dot.is_finite()).then(|| dot / norm)
}

/// Damping that cancels the dominant sweep mode when it is oscillatory.
///
/// For an affine sweep `S` the correction obeys `d' = (1 − ω + ωκ) d` along an
/// eigenvector of `S` with eigenvalue `κ`. The observed ratio gives `κ`, and
/// `ω = 1/(1 − κ)` removes that mode. `ω` never increases.
fn adapt_weight<T: Real>(omega: T, ratio: T) -> T {
    if ratio >= T::lit(-0.3) {
        return omega;
    }
    let kappa = T::one() + (ratio - T::one()) / omega;
    omega.min((T::one() - kappa).recip()).max(T::lit(1e-3))
}

/// Largest `|ẋ + δ₁ a x(g) + δ₂ b x(h)|` over the trajectory's interior.
pub fn residual<T: Real>(tr: &Trajectory<T>, spec: &ProblemSpec<T>) -> T {
    equation_residual(&tr.x, spec, tr.left_margin, tr.right_margin)
}

/// Central-difference residual over nodes whose three-point stencil lies in
/// `[start + left, end − right]`; zero when no node qualifies.
pub fn equation_residual<T: Real>(
    x: &GridFunction<T>,
    spec: &ProblemSpec<T>,
    left: T,
    right: T,
) -> T {
    let h = x.step();
    let slack = T::lit(1e-9) * h;
    let lo = x.t_start() + left - slack;
    let hi = x.t_end() - right + slack;
    let v = x.values();
    let d1 = spec.delta1.value::<T>();
    let d2 = spec.delta2.value::<T>();
    let two = T::lit(2.0);
    (1..v.len().saturating_sub(1))
        .filter(|&i| x.node(i - 1) >= lo && x.node(i + 1) <= hi)
        .map(|i| {
            let t = x.node(i);
            let dx = (v[i + 1] - v[i - 1]) / (two * h);
            (dx + d1 * spec.a(t) * x.value_at(spec.g(t)) + d2 * spec.b(t) * x.value_at(spec.h(t)))
                .abs()
        })
        .fold(T::zero(), T::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryClass {
    Oscillatory,
    NonoscillatoryPositive,
    NonoscillatoryNegative,
    Undetermined,
}

impl fmt::Display for TrajectoryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrajectoryClass::Oscillatory => "oscillatory",
            TrajectoryClass::NonoscillatoryPositive => "nonoscillatory_positive",
            TrajectoryClass::NonoscillatoryNegative => "nonoscillatory_negative",
            TrajectoryClass::Undetermined => "undetermined",
        })
    }
}

/// Sign behaviour on `[t_from, T − σ]`, with threshold `1e−9 · max|x|`.
/// An unconverged trajectory is undetermined.
pub fn classify_trajectory<T: Real>(
    tr: &Trajectory<T>,
    t_from: T,
) -> Result<TrajectoryClass, SimulateError> {
    if !tr.x.domain().contains(t_from) {
        return Err(SimulateError::OutsideDomain(
            t_from.to_f64().unwrap_or(f64::NAN),
        ));
    }
    if !tr.converged {
        return Ok(TrajectoryClass::Undetermined);
    }
    let scale = tr.x.values().iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let eps = T::lit(1e-9) * scale;
    let end = (tr.x.t_end() - tr.right_margin).max(t_from);
    let window: Vec<T> =
        tr.x.iter()
            .filter(|&(t, _)| t >= t_from && t <= end)
            .map(|(_, v)| v)
            .collect();
    let mut last_sign = 0i8;
    for &v in &window {
        let s = if v > T::zero() {
            1
        } else if v < T::zero() {
            -1
        } else {
            0
        };
        if s != 0 {
            if last_sign != 0 && s != last_sign {
                return Ok(TrajectoryClass::Oscillatory);
            }
            last_sign = s;
        }
    }
    if scale > T::zero() && window.iter().all(|&v| v >= eps) {
        Ok(TrajectoryClass::NonoscillatoryPositive)
    } else if scale > T::zero() && window.iter().all(|&v| v <= -eps) {
        Ok(TrajectoryClass::NonoscillatoryNegative)
    } else {
        Ok(TrajectoryClass::Undetermined)
    }
}
