//! Scalar abstraction for the numerical core.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Machine epsilon of the scalar type.
    #[inline]
    fn machine_eps() -> Self {
        Self::default_epsilon()
    }

    /// `max(floor, factor * machine_eps)`, used to widen f64-calibrated
    /// tolerances when working in lower precision.
    #[inline]
    fn tol(floor: f64, factor: f64) -> Self {
        let floor = Self::lit(floor);
        let scaled = Self::lit(factor) * Self::machine_eps();
        if scaled > floor {
            scaled
        } else {
            floor
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
