//! Scalar abstraction shared by every numeric module.
//!
//! Probabilities, parameter coordinates and cost statistics are all carried in
//! a single floating-point type `T: Scalar`. The crate root exposes `f64`
//! aliases for the common case; `f32` works everywhere at reduced precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumCast
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from `f64`, used for configuration constants.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance used for stochasticity checks on model tables.
    fn table_tolerance() -> Self;
}

impl Scalar for f32 {
    fn table_tolerance() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    fn table_tolerance() -> Self {
        1e-9
    }
}
