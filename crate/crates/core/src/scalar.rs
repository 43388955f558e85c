//! Floating-point scalar abstraction shared by the geometry and raster code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    'static + Float + FromPrimitive + NumAssign + Default + Debug + Display + Send + Sync
{
    /// Converts an `f64` literal or computed value into `Self` (rounding for `f32`).
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
