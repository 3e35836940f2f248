//! Scalar abstraction for the floating-point kernels.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the statistics kernels are generic over: f32 or f64.
pub trait Real: Float + FromPrimitive + ToPrimitive + std::fmt::Debug {
    /// Convergence tolerance for iterative special-function evaluation,
    /// scaled to the type's precision.
    fn convergence_eps() -> Self {
        let from_eps = Self::epsilon() * Self::from_f64(8.0).unwrap();
        let floor = Self::from_f64(1e-15).unwrap();
        if from_eps > floor {
            from_eps
        } else {
            floor
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
