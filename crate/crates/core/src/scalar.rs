//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point type the simulator can run on: `f32` or `f64`.
///
/// Tolerances quoted throughout the crate (1e-12 normalisation, 1e-9 solver
/// agreement) assume `f64`; `f32` is usable for quick exploration only.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Machine epsilon-scale floor used when a relative tolerance collapses to zero.
    const TINY: Self;

    /// Lossy conversion from an `f64` literal.
    fn lit(value: f64) -> Self;

    /// Conversion to `f64` for diagnostics and serialisation.
    fn as_f64(self) -> f64;
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const TINY: Self = <$t>::MIN_POSITIVE;

            #[inline]
            fn lit(value: f64) -> Self {
                value as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Shorthand for [`Scalar::lit`].
#[inline]
pub fn lit<T: Scalar>(value: f64) -> T {
    T::lit(value)
}

/// Usize to scalar.
#[inline]
pub fn count<T: Scalar>(n: usize) -> T {
    T::lit(n as f64)
}
