//! Scalar abstraction for the numerical kernels.
//!
//! Every statistic in [`crate::stats`] is written against [`Real`] so it can be
//! evaluated in `f32` or `f64`. Distribution functions (normal quantile,
//! Student-t tail) are always evaluated in `f64` and cast back.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point: f32 or f64.
pub trait Real:
    Float + FromPrimitive + NumCast + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; exact for the constants used in this crate.
    fn of(value: f64) -> Self {
        <Self as NumCast>::from(value).expect("f64 is representable in every Real")
    }

    fn of_usize(value: usize) -> Self {
        <Self as FromPrimitive>::from_usize(value).expect("usize is representable in every Real")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
