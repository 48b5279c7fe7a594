//! Floating-point scalar abstraction shared by the device models and search routines.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// f32 or f64.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a literal constant into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Tightest relative tolerance worth asking for from an iterative search.
    fn tol_floor() -> Self {
        Self::epsilon() * Self::lit(16.0)
    }

    /// Lossy widening used when values leave the generic core (errors, reports).
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `requested` raised to the precision floor of `T`.
pub(crate) fn effective_tol<T: Scalar>(requested: T) -> T {
    requested.max(T::tol_floor())
}
