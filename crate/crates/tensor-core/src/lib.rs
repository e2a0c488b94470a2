//! Dense numeric kernels for transformer analysis.
//!
//! Everything here is plain row-major storage with fixed loop orders, so
//! repeated runs produce bit-identical results. Compute precision is chosen
//! by the element type: `f32` for production inference, `f64` for oracle
//! and high-precision test paths. Dot-product style reductions always
//! accumulate in f64 and round once on output, which keeps algebraically
//! equivalent computation routes within a few ulps of each other even for
//! long reductions.

mod error;
mod kernels;
mod matrix;
mod vector;

pub use error::TensorError;
pub use kernels::{gelu, l1_norm, layer_norm_stats, softmax_in_place, softmax_row};
pub use matrix::Matrix;
pub use vector::Vector;

use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, TensorError>;

/// Element types the kernels operate on (`f32` and `f64`).
pub trait Scalar:
    Float + FromPrimitive + AddAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` constant to the active scalar type.
pub fn cast<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("constant representable in scalar type")
}
