//! Scalar abstraction: all numeric code in this crate is generic over a
//! floating-point type implementing [`Real`] (f32 or f64).

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar: f32 or f64.
///
/// Combines the num-traits float surface with nalgebra's `RealField` so the
/// same scalar drives both the per-pixel arithmetic and the small d×d
/// covariance algebra.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + nalgebra::RealField
    + Default
    + std::iter::Sum
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + nalgebra::RealField
        + Default
        + std::iter::Sum
        + 'static
{
}

/// Inject an f64 constant into the generic scalar type.
#[inline]
pub fn c<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("constant representable in scalar type")
}

// `Float` and nalgebra's `ComplexField` both define sqrt/ln/exp/abs, which
// makes plain method syntax ambiguous under the combined bound. These
// free functions pin the num-traits version.

#[inline]
pub fn sqrt<T: Real>(x: T) -> T {
    Float::sqrt(x)
}

#[inline]
pub fn ln<T: Real>(x: T) -> T {
    Float::ln(x)
}

#[inline]
pub fn exp<T: Real>(x: T) -> T {
    Float::exp(x)
}

#[inline]
pub fn abs<T: Real>(x: T) -> T {
    Float::abs(x)
}

#[inline]
pub fn fmax<T: Real>(a: T, b: T) -> T {
    Float::max(a, b)
}

#[inline]
pub fn fmin<T: Real>(a: T, b: T) -> T {
    Float::min(a, b)
}

/// Clamp into [lo, hi].
#[inline]
pub fn clamp<T: Real>(x: T, lo: T, hi: T) -> T {
    fmax(lo, fmin(hi, x))
}
