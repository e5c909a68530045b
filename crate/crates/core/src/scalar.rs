//! Scalar abstractions.
//!
//! The exact risk formulas only need ordered-field arithmetic, so they are
//! written against [`Scalar`] and can be evaluated in rationals. Anything that
//! touches `exp`/`log` (the logistic surrogate and the channel solvers) needs
//! [`Real`], which is implemented for `f32` and `f64`.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Ordered field element usable by the exact (piecewise-constant) formulas.
pub trait Scalar:
    Num
    + Neg<Output = Self>
    + Copy
    + PartialOrd
    + Debug
    + ToPrimitive
    + FromPrimitive
    + Send
    + Sync
    + 'static
{
    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::one() / Self::two()
    }

    #[inline]
    fn quarter() -> Self {
        Self::half() * Self::half()
    }

    #[inline]
    fn magnitude(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    /// Lossy view used only for tolerance checks and diagnostics.
    #[inline]
    fn approx_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num
        + Neg<Output = T>
        + Copy
        + PartialOrd
        + Debug
        + ToPrimitive
        + FromPrimitive
        + Send
        + Sync
        + 'static
{
}

/// Floating point: f32 or f64.
pub trait Real: Scalar + Float + FloatConst {
    /// Default root tolerance on a channel derivative value.
    const DEFAULT_TOL: Self;
    /// Default threshold for sign claims on channel roots and weight differences.
    const DEFAULT_TOL_SIGN: Self;

    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable")
    }
}

impl Real for f32 {
    const DEFAULT_TOL: f32 = 1e-5;
    const DEFAULT_TOL_SIGN: f32 = 1e-4;
}

impl Real for f64 {
    const DEFAULT_TOL: f64 = 1e-12;
    const DEFAULT_TOL_SIGN: f64 = 1e-8;
}
