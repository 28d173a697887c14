//! Scalar abstraction shared by the analytic modules.
//!
//! Everything that is pure math (lotteries, the fixed-point solver, ODE
//! integration, risk comparisons) is generic over [`Real`]. The simulator
//! works in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type usable by the analytic code.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Allowed deviation of a probability vector's sum from one.
    fn prob_sum_tol() -> Self;

    /// Absolute fixed-point residual accepted by the solver (before the
    /// `max(1, x_n)` scaling).
    fn solver_tol() -> Self;

    /// Converts an `f64` literal. Panics only if the target type cannot
    /// represent finite `f64` values at all, which no supported type does.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    #[inline]
    fn prob_sum_tol() -> Self {
        1e-12
    }

    #[inline]
    fn solver_tol() -> Self {
        1e-12
    }
}

impl Real for f32 {
    #[inline]
    fn prob_sum_tol() -> Self {
        1e-5
    }

    #[inline]
    fn solver_tol() -> Self {
        1e-5
    }
}
