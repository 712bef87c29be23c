//! Floating-point abstraction used throughout the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Scalar type for states, adjoints, controls, and measures.
///
/// Satisfied by `f32` and `f64`. Everything downstream is generic over this
/// trait; the crate root exports `f64`-concrete aliases for the common case.
pub trait Scalar:
    Float + FromPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn real(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant must be representable")
    }

    /// Converts a `usize` (grid sizes, iteration counts) into this scalar type.
    fn count(value: usize) -> Self {
        Self::from_usize(value).expect("usize count must be representable")
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
}
