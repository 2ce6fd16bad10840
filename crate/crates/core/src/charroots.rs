//! Real roots of the characteristic quasi-polynomial of the autonomous
//! equation `x' + δ₁ a x(t−τ) + δ₂ b x(t+σ) = 0`.
//!
//! With the ansatz `x = e^{λt}` the characteristic function is
//! `λ + δ₁ a e^{−λτ} + δ₂ b e^{λσ}`; with `x = e^{−λt}` it is
//! `−λ + δ₁ a e^{λτ} + δ₂ b e^{−λσ}`. The two root sets are negatives of
//! each other.
//!
//! Roots are found by a sign-change scan followed by bisection. Double roots
//! where the function only touches zero are invisible to the scan; such near
//! misses are reported in [`CharRootSet::near_tangencies`].

use std::fmt;
use std::io;

use crate::model::{Sign, SignPattern};
use crate::scalar::Real;

/// Which exponential the root parametrises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// `x(t) = e^{λt}`.
    PlusExponent,
    /// `x(t) = e^{−λt}`.
    MinusExponent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharProblem<T> {
    pub a: T,
    pub b: T,
    pub tau: T,
    pub sigma: T,
    pub delta1: Sign,
    pub delta2: Sign,
    pub convention: Convention,
}

impl<T: Real> CharProblem<T> {
    pub fn new(a: T, b: T, tau: T, sigma: T, pattern: SignPattern, convention: Convention) -> Self {
        let (delta1, delta2) = pattern.signs();
        CharProblem {
            a,
            b,
            tau,
            sigma,
            delta1,
            delta2,
            convention,
        }
    }

    /// `−λ + a e^{λτ} − b e^{−λσ} = 0`, positive roots give decreasing `e^{−λt}`.
    pub fn delay_dominant(a: T, b: T, tau: T, sigma: T) -> Self {
        Self::new(
            a,
            b,
            tau,
            sigma,
            SignPattern::PositiveDelay,
            Convention::MinusExponent,
        )
    }

    /// `λ + a e^{−λτ} − b e^{λσ} = 0`, positive roots give increasing `e^{λt}`.
    pub fn advance_dominant(a: T, b: T, tau: T, sigma: T) -> Self {
        Self::new(
            a,
            b,
            tau,
            sigma,
            SignPattern::PositiveDelay,
            Convention::PlusExponent,
        )
    }

    /// `λ − a e^{−τλ} + b e^{σλ} = 0`.
    pub fn mixed(a: T, b: T, tau: T, sigma: T) -> Self {
        Self::new(
            a,
            b,
            tau,
            sigma,
            SignPattern::NegativeDelay,
            Convention::PlusExponent,
        )
    }

    pub fn pattern(&self) -> SignPattern {
        SignPattern::of(self.delta1, self.delta2)
    }

    /// Same equation, other ansatz.
    pub fn flipped(&self) -> Self {
        let convention = match self.convention {
            Convention::PlusExponent => Convention::MinusExponent,
            Convention::MinusExponent => Convention::PlusExponent,
        };
        CharProblem {
            convention,
            ..*self
        }
    }

    /// Rate `μ` of the solution `e^{μt}` attached to root `λ`.
    pub fn growth_rate(&self, lambda: T) -> T {
        match self.convention {
            Convention::PlusExponent => lambda,
            Convention::MinusExponent => -lambda,
        }
    }

    /// Characteristic function, with saturating exponentials.
    pub fn eval(&self, lambda: T) -> T {
        let mu = self.growth_rate(lambda);
        let d1: T = self.delta1.value();
        let d2: T = self.delta2.value();
        let v = mu
            + d1 * self.a * (-mu * self.tau).exp_sat()
            + d2 * self.b * (mu * self.sigma).exp_sat();
        match self.convention {
            Convention::PlusExponent => v,
            Convention::MinusExponent => -v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions<T> {
    pub lo: T,
    pub hi: T,
    pub step: T,
    pub max_roots: usize,
    /// Bisection stops once `|F| ≤ f_tol`.
    pub f_tol: T,
    pub max_bisections: usize,
    /// Roots closer than this are merged.
    pub separation: T,
    /// `|F|` local minima below this without a sign change are reported.
    pub tangency_tol: T,
}

impl<T: Real> Default for ScanOptions<T> {
    fn default() -> Self {
        ScanOptions {
            lo: T::lit(-60.0),
            hi: T::lit(60.0),
            step: T::lit(1e-3),
            max_roots: 64,
            f_tol: T::lit(1e-12),
            max_bisections: 200,
            separation: T::lit(1e-9),
            tangency_tol: T::lit(1e-6),
        }
    }
}

impl<T: Real> ScanOptions<T> {
    pub fn on(lo: T, hi: T) -> Self {
        ScanOptions {
            lo,
            hi,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootClass {
    Growing,
    Decaying,
    Constant,
}

impl fmt::Display for RootClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RootClass::Growing => "growing",
            RootClass::Decaying => "decaying",
            RootClass::Constant => "constant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharRoot<T> {
    pub lambda: T,
    /// `|F(λ)|`.
    pub residual: T,
    pub class: RootClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharRootSet<T> {
    /// Ascending.
    pub roots: Vec<CharRoot<T>>,
    pub scanned: (T, T),
    /// More roots existed than `max_roots`.
    pub truncated: bool,
    /// Points where `|F|` dipped below the tangency tolerance without a sign change.
    pub near_tangencies: Vec<T>,
}

impl<T: Real> CharRootSet<T> {
    pub fn lambdas(&self) -> Vec<T> {
        self.roots.iter().map(|r| r.lambda).collect()
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["root", "residual", "class"])?;
        for r in &self.roots {
            out.write_record([
                r.lambda.to_string(),
                r.residual.to_string(),
                r.class.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Tags the exponential solution of every root.
fn classify<T: Real>(p: &CharProblem<T>, lambda: T) -> RootClass {
    let mu = p.growth_rate(lambda);
    if mu.abs() <= T::lit(1e-12) {
        RootClass::Constant
    } else if mu > T::zero() {
        RootClass::Growing
    } else {
        RootClass::Decaying
    }
}

fn bisect<T: Real>(
    p: &CharProblem<T>,
    mut lo: T,
    mut hi: T,
    mut flo: T,
    opts: &ScanOptions<T>,
) -> T {
    let two = T::lit(2.0);
    let mut mid = (lo + hi) / two;
    for _ in 0..opts.max_bisections {
        mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = p.eval(mid);
        if fm == T::zero() || fm.abs() <= opts.f_tol {
            return mid;
        }
        if (fm < T::zero()) == (flo < T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    // Pick whichever end of the final bracket has the smaller residual.
    [lo, mid, hi]
        .into_iter()
        .min_by(|x, y| {
            p.eval(*x)
                .abs()
                .partial_cmp(&p.eval(*y).abs())
                .expect("finite")
        })
        .expect("three candidates")
}

/// Sign-change scan over `[opts.lo, opts.hi]` followed by bisection.
pub fn find_real_roots<T: Real>(p: &CharProblem<T>, opts: &ScanOptions<T>) -> CharRootSet<T> {
    let n = ((opts.hi - opts.lo) / opts.step)
        .ceil()
        .to_usize()
        .unwrap_or(0)
        .max(1);
    let node = |i: usize| {
        if i == n {
            opts.hi
        } else {
            opts.lo + opts.step * T::from_count(i)
        }
    };

    let mut roots: Vec<T> = Vec::new();
    let mut tangencies = Vec::new();
    let mut truncated = false;
    let push = |r: T, roots: &mut Vec<T>| -> bool {
        if roots
            .last()
            .is_some_and(|&last| (r - last).abs() <= opts.separation)
        {
            return true;
        }
        if roots.len() == opts.max_roots {
            return false;
        }
        roots.push(r);
        true
    };

    let mut x_prev = node(0);
    let mut f_prev = p.eval(x_prev);
    let mut abs_prev2 = T::infinity();
    if f_prev == T::zero() {
        push(x_prev, &mut roots);
    }
    for i in 1..=n {
        let x = node(i);
        let f = p.eval(x);
        let ok = if f == T::zero() {
            push(x, &mut roots)
        } else if f_prev != T::zero() && (f < T::zero()) != (f_prev < T::zero()) {
            push(bisect(p, x_prev, x, f_prev, opts), &mut roots)
        } else {
            // |F| local minimum below tolerance with no sign change around it.
            if f_prev != T::zero()
                && f_prev.abs() <= opts.tangency_tol
                && f_prev.abs() <= abs_prev2
                && f_prev.abs() <= f.abs()
            {
                tangencies.push(x_prev);
            }
            true
        };
        if !ok {
            truncated = true;
            break;
        }
        abs_prev2 = f_prev.abs();
        x_prev = x;
        f_prev = f;
    }

    let roots = roots
        .into_iter()
        .map(|lambda| CharRoot {
            lambda,
            residual: p.eval(lambda).abs(),
            class: classify(p, lambda),
        })
        .collect();
    CharRootSet {
        roots,
        scanned: (opts.lo, opts.hi),
        truncated,
        near_tangencies: tangencies,
    }
}

/// Smallest root above `1e−12` in the default scan, if any.
pub fn positive_root_exists<T: Real>(p: &CharProblem<T>) -> Option<T> {
    positive_root_with(p, &ScanOptions::on(T::zero(), T::lit(60.0)))
}

pub fn positive_root_with<T: Real>(p: &CharProblem<T>, opts: &ScanOptions<T>) -> Option<T> {
    let eps = T::lit(1e-12);
    let opts = ScanOptions {
        lo: opts.lo.max(T::zero()),
        ..*opts
    };
    find_real_roots(p, &opts)
        .roots
        .into_iter()
        .map(|r| r.lambda)
        .find(|&l| l > eps)
}

/// Root set annotated with what the exponential solutions do.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionModes<T> {
    pub roots: Vec<CharRoot<T>>,
    pub has_decaying_positive_solution: bool,
    pub has_growing_positive_solution: bool,
}

pub fn classify_solutions<T: Real>(rs: &CharRootSet<T>, p: &CharProblem<T>) -> SolutionModes<T> {
    let roots: Vec<_> = rs
        .roots
        .iter()
        .map(|r| CharRoot {
            class: classify(p, r.lambda),
            ..*r
        })
        .collect();
    SolutionModes {
        has_decaying_positive_solution: roots.iter().any(|r| r.class == RootClass::Decaying),
        has_growing_positive_solution: roots.iter().any(|r| r.class == RootClass::Growing),
        roots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex1() -> CharProblem<f64> {
        CharProblem::delay_dominant(1.4, 1.3, 0.3, 0.3)
    }

    #[test]
    fn example1_three_roots() {
        let rs = find_real_roots(&ex1(), &ScanOptions::default());
        let l = rs.lambdas();
        assert_eq!(l.len(), 3, "{:?}", l);
        for (got, want) in l.iter().zip([-4.2282, 0.5436, 3.3541]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
        assert!(rs.roots.iter().all(|r| r.residual <= 1e-10));
        let modes = classify_solutions(&rs, &ex1());
        let classes: Vec<_> = modes.roots.iter().map(|r| r.class).collect();
        assert_eq!(
            classes,
            [RootClass::Growing, RootClass::Decaying, RootClass::Decaying]
        );
    }

    #[test]
    fn zero_coefficients_leave_linear_function() {
        for pattern in [SignPattern::PositiveDelay, SignPattern::NegativeDelay] {
            for conv in [Convention::PlusExponent, Convention::MinusExponent] {
                let p = CharProblem::new(0.0f64, 0.0, 0.5, 0.5, pattern, conv);
                let rs = find_real_roots(&p, &ScanOptions::on(-3.0, 3.0));
                assert_eq!(rs.roots.len(), 1);
                assert!(rs.roots[0].lambda.abs() < 1e-12);
                assert_eq!(rs.roots[0].class, RootClass::Constant);
            }
        }
    }

    #[test]
    fn mixed_equation_has_a_root() {
        let p = CharProblem::mixed(2.0, 1.0, 0.5, 0.5);
        let rs = find_real_roots(&p, &ScanOptions::default());
        assert!(!rs.roots.is_empty());
        // F(0) = b − a < 0 and F increases, so the root is positive: growing solution.
        let modes = classify_solutions(&rs, &p);
        assert!(modes.has_growing_positive_solution);
    }

    #[test]
    fn mixed_equation_with_b_above_a_decays() {
        let p = CharProblem::mixed(1.0, 2.0, 0.5, 0.5);
        let modes = classify_solutions(&find_real_roots(&p, &ScanOptions::default()), &p);
        assert!(modes.has_decaying_positive_solution);
    }

    #[test]
    fn positive_roots() {
        assert!((positive_root_exists(&ex1()).unwrap() - 0.5436).abs() < 1e-3);
        // Pure delay with aτ = 0.42 > 1/e: −λ + 1.4 e^{0.3λ} > 0 for all λ.
        assert_eq!(
            positive_root_exists(&CharProblem::delay_dominant(1.4, 0.0, 0.3, 0.3)),
            None
        );
        // Pure advance with bσ = 0.3 ≤ 1/e: λ = e^{0.3λ} has a root.
        let r =
            positive_root_exists(&CharProblem::advance_dominant(0.0f64, 1.0, 0.3, 0.3)).unwrap();
        assert!((r - (0.3 * r).exp()).abs() < 1e-9);
    }

    #[test]
    fn root_at_zero_is_not_positive() {
        // −λ + 2 sinh(0.6 λ) has F(0) = 0 and F'(0) = 0.2 > 0, convex for λ > 0.
        let p = CharProblem::delay_dominant(1.0f64, 1.0, 0.6, 0.6);
        assert_eq!(positive_root_exists(&p), None);
        let rs = find_real_roots(&p, &ScanOptions::on(-5.0, 5.0));
        assert!(rs.lambdas().iter().any(|l| l.abs() < 1e-12));
    }

    #[test]
    fn truncation_flag() {
        let opts = ScanOptions {
            max_roots: 2,
            ..ScanOptions::default()
        };
        let rs = find_real_roots(&ex1(), &opts);
        assert!(rs.truncated);
        assert_eq!(rs.roots.len(), 2);
    }

    #[test]
    fn tangency_is_reported() {
        // −λ + a e^{λτ} with aτe = 1 touches zero at λ = 1/τ.
        let tau = 0.5;
        let a = 1.0 / (tau * std::f64::consts::E);
        let p = CharProblem::delay_dominant(a, 0.0, tau, 0.0);
        let rs = find_real_roots(&p, &ScanOptions::on(0.0003, 5.0));
        assert!(rs.roots.is_empty());
        assert!(rs.near_tangencies.iter().any(|t| (t - 2.0).abs() < 1e-2));
    }

    #[test]
    fn single_precision_example1() {
        let p = CharProblem::<f32>::delay_dominant(1.4, 1.3, 0.3, 0.3);
        let rs = find_real_roots(&p, &ScanOptions::on(-10.0, 10.0));
        let l = rs.lambdas();
        assert_eq!(l.len(), 3);
        assert!((l[1] - 0.5436).abs() < 1e-3);
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        find_real_roots(&ex1(), &ScanOptions::default())
            .write_csv(&mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("root,residual,class\n"));
    }

    proptest! {
        #[test]
        fn conventions_are_dual(a in 0.0..5.0f64, b in 0.0..5.0f64, tau in 0.0..2.0f64, sigma in 0.0..2.0f64,
                                pat in 0usize..4) {
            let pattern = [SignPattern::BothPositive, SignPattern::BothNegative,
                           SignPattern::PositiveDelay, SignPattern::NegativeDelay][pat];
            let p = CharProblem::new(a, b, tau, sigma, pattern, Convention::PlusExponent);
            let opts = ScanOptions::on(-20.0, 20.0);
            let plus = find_real_roots(&p, &opts).lambdas();
            let mut minus: Vec<f64> = find_real_roots(&p.flipped(), &opts).lambdas().iter().map(|l| -l).collect();
            minus.reverse();
            prop_assert_eq!(plus.len(), minus.len());
            for (x, y) in plus.iter().zip(&minus) {
                prop_assert!((x - y).abs() <= 1e-10, "{} vs {}", x, y);
            }
        }

        #[test]
        fn mixed_pattern_always_has_a_root(a in 1e-3..5.0f64, b in 1e-3..5.0f64,
                                           tau in 1e-3..5.0f64, sigma in 1e-3..5.0f64) {
            let p = CharProblem::mixed(a, b, tau, sigma);
            let rs = find_real_roots(&p, &ScanOptions::default());
            prop_assert!(!rs.roots.is_empty());
            for r in &rs.roots {
                prop_assert!(r.residual <= 1e-10);
            }
        }
    }
}
