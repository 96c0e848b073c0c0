//! Scalar abstraction: the numeric kernels are generic over `f32`/`f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast, ToPrimitive};

/// Floating-point scalar used by tensors, the regressor and the normalizer.
///
/// Tests and verification paths run at `f64`; `f32` is available for
/// storage-sensitive production paths through the crate-root aliases.
pub trait Scalar:
    Float + FloatConst + NumCast + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Conversion from `f64`, rounding to the nearest representable value.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("finite f64 is representable")
    }

    /// Widening (or identity) conversion to `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
