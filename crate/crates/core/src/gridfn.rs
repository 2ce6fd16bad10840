//! Functions sampled on a uniform grid, with linear interpolation and
//! trapezoidal integration between arbitrary endpoints.
//!
//! Evaluation outside `[t_start, t_end]` clamps to the nearest end value and
//! reports the extrapolation, since advanced arguments near the right edge
//! routinely look past the grid.

use std::io;

use thiserror::Error;

use crate::model::Window;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("a grid function needs at least 2 values")]
    TooFewValues,
    #[error("grid step must be positive and finite")]
    BadStep,
    #[error("integration bounds reversed: lo = {lo} > hi = {hi}")]
    ReversedBounds { lo: f64, hi: f64 },
    #[error("window [{lo}, {hi}] does not overlap the grid")]
    EmptyOverlap { lo: f64, hi: f64 },
}

/// Interpolated value plus whether the point was outside the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub value: T,
    pub extrapolated: bool,
}

/// Result of [`GridFunction::integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    t_start: T,
    step: T,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(t_start: T, step: T, values: Vec<T>) -> Result<Self, GridError> {
        if values.len() < 2 {
            return Err(GridError::TooFewValues);
        }
        if !(step > T::zero() && step.is_finite()) {
            return Err(GridError::BadStep);
        }
        Ok(GridFunction {
            t_start,
            step,
            values,
        })
    }

    /// Samples `f` on `window` with spacing as close to `step` as possible
    /// while landing exactly on both ends.
    pub fn from_fn(window: Window<T>, step: T, f: impl FnMut(T) -> T) -> Result<Self, GridError> {
        if !(step > T::zero() && step.is_finite()) {
            return Err(GridError::BadStep);
        }
        if window.is_empty() {
            return Err(GridError::TooFewValues);
        }
        let n = (window.len() / step).round().to_usize().unwrap_or(1).max(1);
        let h = window.len() / T::from_count(n);
        let values = (0..=n)
            .map(|i| {
                if i == n {
                    window.hi
                } else {
                    window.lo + h * T::from_count(i)
                }
            })
            .map(f)
            .collect();
        Self::new(window.lo, h, values)
    }

    /// Same grid, different values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self, GridError> {
        if values.len() != self.values.len() {
            return Err(GridError::TooFewValues);
        }
        Self::new(self.t_start, self.step, values)
    }

    pub fn constant_like(&self, c: T) -> Self {
        GridFunction {
            t_start: self.t_start,
            step: self.step,
            values: vec![c; self.len()],
        }
    }

    pub fn map(&self, mut f: impl FnMut(T, T) -> T) -> Self {
        let values = self.iter().map(|(t, v)| f(t, v)).collect();
        GridFunction {
            t_start: self.t_start,
            step: self.step,
            values,
        }
    }

    pub fn t_start(&self) -> T {
        self.t_start
    }

    pub fn t_end(&self) -> T {
        self.node(self.values.len() - 1)
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn domain(&self) -> Window<T> {
        Window::new(self.t_start, self.t_end())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn node(&self, i: usize) -> T {
        self.t_start + self.step * T::from_count(i)
    }

    /// `(t_i, f_i)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.node(i), v))
    }

    /// Cell index and fractional offset of `t`, assuming it lies on the grid.
    #[inline]
    fn locate(&self, t: T) -> (usize, T) {
        let pos = (t - self.t_start) / self.step;
        let last = self.values.len() - 2;
        let i = pos.floor().to_usize().unwrap_or(0).min(last);
        (i, pos - T::from_count(i))
    }

    pub fn eval(&self, t: T) -> Sample<T> {
        if t <= self.t_start {
            return Sample {
                value: self.values[0],
                extrapolated: t < self.t_start,
            };
        }
        if t >= self.t_end() {
            let last = *self.values.last().expect("nonempty");
            return Sample {
                value: last,
                extrapolated: t > self.t_end(),
            };
        }
        let (i, frac) = self.locate(t);
        let value = self.values[i] + frac * (self.values[i + 1] - self.values[i]);
        Sample {
            value,
            extrapolated: false,
        }
    }

    /// Interpolated (or clamped) value.
    #[inline]
    pub fn value_at(&self, t: T) -> T {
        self.eval(t).value
    }

    /// Composite trapezoid over `[lo, hi]`: interpolated values at the two
    /// ends plus every node strictly inside. Parts outside the grid use the
    /// clamped end values.
    pub fn integrate(&self, lo: T, hi: T) -> Result<Quadrature<T>, GridError> {
        if lo > hi {
            return Err(GridError::ReversedBounds {
                lo: lo.to_f64().unwrap_or(f64::NAN),
                hi: hi.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (start, end) = (self.t_start, self.t_end());
        let mut value = T::zero();
        let mut extrapolated = false;
        if lo < start {
            value = value + (hi.min(start) - lo) * self.values[0];
            extrapolated = true;
        }
        if hi > end {
            value = value + (hi - lo.max(end)) * *self.values.last().expect("nonempty");
            extrapolated = true;
        }
        let (a, b) = (lo.max(start), hi.min(end));
        if b > a {
            value = value + self.trapezoid_inside(a, b);
        }
        Ok(Quadrature {
            value,
            extrapolated,
        })
    }

    fn trapezoid_inside(&self, a: T, b: T) -> T {
        let half = T::lit(0.5);
        let first = ((a - self.t_start) / self.step)
            .floor()
            .to_usize()
            .unwrap_or(0)
            + 1;
        let last_plus = ((b - self.t_start) / self.step)
            .ceil()
            .to_usize()
            .unwrap_or(0);
        let last_plus = last_plus.min(self.values.len() - 1);
        let (mut prev_t, mut prev_v) = (a, self.value_at(a));
        let mut acc = T::zero();
        for k in first..last_plus {
            let (t, v) = (self.node(k), self.values[k]);
            if t <= a || t >= b {
                continue;
            }
            acc = acc + (t - prev_t) * (prev_v + v) * half;
            prev_t = t;
            prev_v = v;
        }
        acc + (b - prev_t) * (prev_v + self.value_at(b)) * half
    }

    /// Largest value over the part of `[lo, hi]` covered by the grid,
    /// counting the interpolated end values.
    pub fn sup_window(&self, lo: T, hi: T) -> Result<T, GridError> {
        let (a, b) = (lo.max(self.t_start), hi.min(self.t_end()));
        if !(a <= b) {
            return Err(GridError::EmptyOverlap {
                lo: lo.to_f64().unwrap_or(f64::NAN),
                hi: hi.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut best = self.value_at(a).max(self.value_at(b));
        for (t, v) in self.iter() {
            if t > a && t < b {
                best = best.max(v);
            }
        }
        Ok(best)
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// `max_i |f_i − g_i|` for two functions on the same grid.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| (x - y).abs())
            .fold(T::zero(), T::max)
    }

    /// Running integral from `t_start`, for repeated integrals on one grid.
    pub fn cumulative(&self) -> CumulativeIntegral<'_, T> {
        CumulativeIntegral::new(self)
    }

    /// Writes `t,value` rows with a header line.
    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "value"])?;
        for (t, v) in self.iter() {
            out.write_record([t.to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Prefix sums of the trapezoid rule, so that `∫_lo^hi f` is an O(1)
/// difference of antiderivative values. The antiderivative beyond the grid
/// continues with the clamped end values, matching [`GridFunction::integrate`].
#[derive(Debug, Clone)]
pub struct CumulativeIntegral<'a, T> {
    grid: &'a GridFunction<T>,
    prefix: Vec<T>,
}

impl<'a, T: Real> CumulativeIntegral<'a, T> {
    fn new(grid: &'a GridFunction<T>) -> Self {
        let half = T::lit(0.5);
        let mut prefix = Vec::with_capacity(grid.len());
        let mut acc = T::zero();
        prefix.push(acc);
        for w in grid.values.windows(2) {
            acc = acc + grid.step * (w[0] + w[1]) * half;
            prefix.push(acc);
        }
        CumulativeIntegral { grid, prefix }
    }

    /// `∫_{t_start}^{x} f`, with clamped continuation outside the grid.
    pub fn antiderivative(&self, x: T) -> T {
        let g = self.grid;
        if x <= g.t_start {
            return (x - g.t_start) * g.values[0];
        }
        let end = g.t_end();
        if x >= end {
            let last = g.values.len() - 1;
            return self.prefix[last] + (x - end) * g.values[last];
        }
        let (i, frac) = g.locate(x);
        let vx = g.values[i] + frac * (g.values[i + 1] - g.values[i]);
        self.prefix[i] + (x - g.node(i)) * (g.values[i] + vx) * T::lit(0.5)
    }

    pub fn integral(&self, lo: T, hi: T) -> T {
        if lo == hi {
            return T::zero();
        }
        self.antiderivative(hi) - self.antiderivative(lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(lo: f64, hi: f64, step: f64, f: impl FnMut(f64) -> f64) -> GridFunction<f64> {
        GridFunction::from_fn(Window::new(lo, hi), step, f).unwrap()
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            GridFunction::new(0.0, 1.0, vec![1.0]),
            Err(GridError::TooFewValues)
        );
        assert_eq!(
            GridFunction::new(0.0, 0.0, vec![1.0, 2.0]),
            Err(GridError::BadStep)
        );
        assert_eq!(
            GridFunction::new(0.0, -1.0, vec![1.0, 2.0]),
            Err(GridError::BadStep)
        );
    }

    #[test]
    fn constant_integrand() {
        let f = grid(0.0, 10.0, 0.1, |_| 1.0);
        let q = f.integrate(2.5, 3.5).unwrap();
        assert!((q.value - 1.0).abs() < 1e-14);
        assert!(!q.extrapolated);
    }

    #[test]
    fn affine_is_exact() {
        let f = grid(0.0, 2.0, 0.01, |t| t);
        assert!((f.integrate(0.0, 2.0).unwrap().value - 2.0).abs() < 1e-13);
        assert!(
            (f.integrate(0.123, 1.777).unwrap().value
                - (1.777f64.powi(2) - 0.123f64.powi(2)) / 2.0)
                .abs()
                < 1e-13
        );
    }

    #[test]
    fn sine_against_antiderivative() {
        let f = grid(0.0, PI, 1e-3, f64::sin);
        // ∫_0^π sin = 2
        assert!((f.integrate(0.0, PI).unwrap().value - 2.0).abs() < 1e-5);
    }

    #[test]
    fn reversed_bounds_fault() {
        let f = grid(0.0, 1.0, 0.1, |t| t);
        assert!(matches!(
            f.integrate(0.7, 0.2),
            Err(GridError::ReversedBounds { .. })
        ));
    }

    #[test]
    fn extrapolation_clamps_and_flags() {
        let f = grid(0.0, 1.0, 0.1, |t| 2.0 + t);
        let q = f.integrate(0.5, 1.5).unwrap();
        assert!(q.extrapolated);
        // 0.5 * (2.5 + 3)/2 on the grid, then 0.5 * 3 beyond it
        assert!((q.value - (1.375 + 1.5)).abs() < 1e-13);
        let q = f.integrate(-1.0, 0.0).unwrap();
        assert!(q.extrapolated);
        assert!((q.value - 2.0).abs() < 1e-14);
        assert!(f.eval(-3.0).extrapolated);
        assert_eq!(f.eval(-3.0).value, 2.0);
        assert!(!f.eval(0.55).extrapolated);
    }

    #[test]
    fn sup_examples() {
        let f = grid(0.0, 2.0 * PI, 1e-3, f64::cos);
        assert!((f.sup_window(0.0, 2.0 * PI).unwrap() - 1.0).abs() < 1e-6);
        let f = grid(-5.0, 5.0, 0.5, |_| 0.39);
        assert_eq!(f.sup_window(-100.0, 100.0).unwrap(), 0.39);
        let f = grid(0.0, 1.0, 0.1, |t| t);
        assert!((f.sup_window(0.25, 0.75).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(
            f.sup_window(2.0, 3.0),
            Err(GridError::EmptyOverlap { .. })
        ));
    }

    #[test]
    fn cumulative_matches_direct() {
        let f = grid(0.0, 7.0, 1e-2, |t| (t * 1.3).sin() + 2.0);
        let c = f.cumulative();
        for &(lo, hi) in &[
            (0.0, 7.0),
            (0.013, 3.3),
            (2.0, 2.0),
            (-1.0, 1.0),
            (6.5, 8.25),
        ] {
            let d = f.integrate(lo, hi).unwrap().value;
            assert!((c.integral(lo, hi) - d).abs() < 1e-12, "{lo} {hi}");
        }
    }

    #[test]
    fn refinement_is_second_order() {
        let err =
            |h: f64| (grid(0.0, PI, h, f64::sin).integrate(0.0, PI).unwrap().value - 2.0).abs();
        let (e1, e2) = (err(0.02), err(0.01));
        // Halving the step cuts the error by about 4 and |e| ≤ C h² with C = π/12.
        assert!(e1 / e2 > 3.9 && e1 / e2 < 4.1);
        assert!(e2 <= PI / 12.0 * 0.01f64.powi(2) * 1.01);
    }

    #[test]
    fn csv_export() {
        let f = grid(0.0, 1.0, 0.5, |t| 2.0 * t);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,value\n0,0\n0.5,1\n1,2\n"
        );
    }

    #[test]
    fn single_precision_integral() {
        let f = GridFunction::<f32>::from_fn(Window::new(0.0, 2.0), 0.01, |t| t).unwrap();
        assert!((f.integrate(0.0, 2.0).unwrap().value - 2.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn additivity(a in -1.0..4.0f64, w1 in 0.0..3.0f64, w2 in 0.0..3.0f64, k in 0.1..3.0f64) {
            let f = grid(-1.0, 10.0, 1e-3, |t| (k * t).sin() * t + 1.5);
            let (b, c) = (a + w1, a + w1 + w2);
            let whole = f.integrate(a, c).unwrap().value;
            let parts = f.integrate(a, b).unwrap().value + f.integrate(b, c).unwrap().value;
            prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1.0));
        }

        #[test]
        fn linearity(a in 0.0..4.0f64, w in 0.0..5.0f64, alpha in -3.0..3.0f64, beta in -3.0..3.0f64) {
            let f = grid(0.0, 10.0, 1e-3, |t| t.cos() + 0.5 * t);
            let g = grid(0.0, 10.0, 1e-3, |t| (0.3 * t).exp());
            let comb = f.with_values(
                f.values().iter().zip(g.values()).map(|(x, y)| alpha * x + beta * y).collect(),
            ).unwrap();
            let lhs = comb.integrate(a, a + w).unwrap().value;
            let rhs = alpha * f.integrate(a, a + w).unwrap().value + beta * g.integrate(a, a + w).unwrap().value;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }

        #[test]
        fn monotone_in_integrand(a in 0.0..4.0f64, w in 0.0..5.0f64, shift in 0.0..1.0f64) {
            let f = grid(0.0, 10.0, 1e-3, |t| t.sin());
            let g = f.map(|t, v| v + shift * (1.0 + t.cos()) * 0.5);
            let (i, j) = (f.integrate(a, a + w).unwrap().value, g.integrate(a, a + w).unwrap().value);
            prop_assert!(i <= j + 1e-12);
        }
    }
}
