//! The scalar abstraction every pointwise geometric routine is generic over.
//!
//! Metric functions `F(x, y)` are written once against [`Scalar`] and then
//! evaluated with plain floats for values, or with (nested) [`Dual`] numbers
//! to obtain exact derivatives in `x` and `y`.
//!
//! [`Dual`]: crate::dual::Dual

use std::fmt::Debug;

use num_traits::{Float, FloatConst};

/// Floating point type usable by the metric and spray code.
pub trait Scalar: Float + FloatConst + Debug + Default + Send + Sync + 'static {
    /// Value of the non-infinitesimal part, as `f64`.
    fn re(&self) -> f64;

    /// Lift an `f64` constant (all infinitesimal parts zero).
    fn cst(v: f64) -> Self;

    /// True when every component (real and infinitesimal) is exactly zero.
    fn is_exact_zero(&self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn re(&self) -> f64 {
        *self
    }

    #[inline]
    fn cst(v: f64) -> Self {
        v
    }

    #[inline]
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Scalar for f32 {
    #[inline]
    fn re(&self) -> f64 {
        *self as f64
    }

    #[inline]
    fn cst(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}

/// Lift a slice of `f64` into constants of `T`.
pub fn lift<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&a| T::cst(a)).collect()
}

/// Real parts of a slice.
pub fn real_parts<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(Scalar::re).collect()
}
