//! Scalar abstraction for the numeric kernels.
//!
//! The physics kernels (refractive indices, phase matching, line shapes,
//! smoothing) are generic over [`Real`] so they can run in `f32` or `f64`.
//! The event pipeline and count images are concrete `f64`/`u64`; see the
//! type aliases at the crate root.

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Shorthand for lossy conversion from `f64` literals.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}
