use core::fmt::{Debug, Display};
use core::iter::Sum;
use core::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point element type for every kernel in this crate.
///
/// Blanket-implemented, so `f32` and `f64` both qualify. Special functions
/// (`log_gamma`) are evaluated in `f64` and narrowed back.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }

    /// Natural log of the gamma function for positive arguments.
    #[inline]
    fn log_gamma(self) -> Self {
        Self::lit(libm::lgamma(self.as_f64()))
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Default
        + Sum
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_gamma_small_integers() {
        assert!((3.0f64.log_gamma() - 2.0f64.ln()).abs() < 1e-15);
        assert!(1.0f64.log_gamma().abs() < 1e-15);
        assert!((0.5f64.log_gamma() - 0.5 * core::f64::consts::PI.ln()).abs() < 1e-14);
        assert!((3.0f32.log_gamma() - 2.0f32.ln()).abs() < 1e-6);
    }
}
