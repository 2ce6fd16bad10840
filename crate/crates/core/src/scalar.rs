//! The floating-point scalar every routine in the crate is generic over.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Display
    + LowerExp
    + Debug
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts a literal. Panics only for values the type cannot represent at all (NaN never is).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts an index or count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// `exp` whose argument is capped just below the overflow threshold, so
    /// the result saturates at a large finite value instead of `inf`.
    #[inline]
    fn exp_sat(self) -> Self {
        let cap = Self::max_value().ln() - Self::lit(1.0);
        self.min(cap).exp()
    }

    /// `1/e`.
    #[inline]
    fn inv_e() -> Self {
        Self::E().recip()
    }
}

impl Real for f32 {}
impl Real for f64 {}
