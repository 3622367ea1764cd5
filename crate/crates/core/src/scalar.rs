//! Floating-point scalar abstraction.
//!
//! All geometry in this crate is generic over [`Scalar`], which is implemented
//! for `f32` and `f64`. Concrete type aliases live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, SubAssign};

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating-point scalar (f32 or f64).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumCast
    + AddAssign
    + SubAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn cast(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("finite f64 constant")
    }

    /// Converts this scalar to `f64`.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Converts a `usize` count into this scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("count fits in scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
