use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type for the generic math modules.
///
/// Blanket-implemented for anything float-like; in practice `f32` and `f64`.
/// The fixed tolerances in this crate (branch thresholds, truncation cutoffs)
/// are stated in `f64` and converted with [`Real::of`], so `f32` works but
/// saturates those tolerances at its own precision.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + core::iter::Sum
    + core::ops::AddAssign
    + core::ops::SubAssign
    + core::ops::MulAssign
    + core::ops::DivAssign
    + core::fmt::Debug
    + core::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    /// Lossy view as `f64`, for error payloads and reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + core::iter::Sum
        + core::ops::AddAssign
        + core::ops::SubAssign
        + core::ops::MulAssign
        + core::ops::DivAssign
        + core::fmt::Debug
        + core::fmt::Display
        + Default
        + Send
        + Sync
        + 'static
{
}
