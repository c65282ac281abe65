use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar type the simulator and the closed-form attack formulas are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances scale with the machine epsilon so that
/// single precision registers stay usable, while `f64` keeps the tight `1e-10` / `1e-12`
/// bounds.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance for norms and probabilities.
    fn norm_tolerance() -> Self {
        Self::lit(1e-10).max(Self::epsilon() * Self::lit(100.0))
    }

    /// Tolerance for entrywise matrix and amplitude checks.
    fn entry_tolerance() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(10.0))
    }

    /// Converts an `f64` literal. Every `f64` is representable (possibly rounded) in the
    /// implementing types, so this never fails.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal converts to scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
