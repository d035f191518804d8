//! Scalar abstraction: all numerics are generic over an IEEE float type.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar for the whole crate: `f32` or `f64`.
///
/// Tolerance defaults throughout the crate are stated for `f64`; with `f32`
/// callers must widen them.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossless-enough literal injection.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a generic scalar.
pub type C<T> = num_complex::Complex<T>;

pub fn c<T: Real>(re: f64, im: f64) -> C<T> {
    C::new(T::of(re), T::of(im))
}

/// Component-wise finiteness (avoids the `FloatCore` bound of
/// `Complex::is_finite`).
pub fn finite_c<T: Real>(z: C<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
