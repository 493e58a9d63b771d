//! Numerical laboratory for convergence rates of empirical measures in the
//! classical and Gaussian-smoothed p-Wasserstein distances.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bounds;
pub mod critical;
pub mod error;
pub mod harness;
pub mod measures;
pub mod numerics;
pub mod sharprate;
pub mod smoothing;
pub mod transport;

pub use error::{Error, Result};
pub use numerics::Real;

/// Quadrature tolerances in double precision.
pub type Quadrature = numerics::QuadratureSpec<f64>;
/// Closed-form rate-constant parameters in double precision.
pub type RateSpec = bounds::SmoothRateConstantSpec<f64>;
/// Survival function in double precision.
pub type Tail = numerics::Survival<f64>;
pub use critical::{CalibrationFunction as Calibration, TailFunction};
