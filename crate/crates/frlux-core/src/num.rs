//! Scalar abstraction for the numeric kernels.
//!
//! Low-level math (projections, cost functionals, performance metrics,
//! advantage estimation) is generic over [`Real`] so the same kernels run in
//! `f32` or `f64`. The simulation, policy, and training layers work in the
//! crate-level [`crate::Scalar`] alias (`f64`).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + 'static
{
    /// Lossless conversion from a literal in `f64`.
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + 'static
{
}
