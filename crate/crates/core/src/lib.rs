//! Numerical toolkit for Finsler structures on a single chart.
// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod dual;
pub mod error;
pub mod expr;
pub mod geodesic;
pub mod harmonic;
pub mod linalg;
pub mod measure;
pub mod metric;
pub mod ode;
pub mod quadrature;
pub mod randers;
pub mod scalar;
pub mod spray;
pub mod tensor;

pub use dual::{Dual, HyperDual};
pub use error::{FinslerError, Result};
pub use metric::{Domain, FinslerMetric, MetricKind, MetricSpec};
pub use scalar::Scalar;

pub type Dual64 = Dual<f64>;
pub type HyperDual64 = HyperDual<f64>;
pub type Point = Vec<f64>;
