//! Scalar abstraction for the numeric parts of the crate.

use std::fmt::Debug;

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + num_traits::NumAssign + Debug + Default + Send + Sync + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal fits scalar")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("count fits scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
