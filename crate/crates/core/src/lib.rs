//! Derivative-free minimization with the barycenter method.
//!
//! The estimate of a minimizer is the center of mass of all tested points,
//! each weighted by `exp(-nu * f(x))`. The crate provides:
//!
//! - [`barycenter`]: batch and recursive barycenters, plus the complex-exponent
//!   variant whose estimate is the componentwise modulus.
//! - [`search`]: the randomized recursive search, where every test point is the
//!   current barycenter plus a Gaussian "curiosity" step.
//! - [`oracles`]: benchmark objectives, quadratic test functions and a noise
//!   wrapper.
//! - [`verify`]: Monte Carlo checks comparing empirical step and noise
//!   statistics against their closed-form predictions.

pub mod barycenter;
pub mod bench;
mod error;
pub mod linalg;
pub mod oracles;
pub mod rng;
pub mod search;
pub mod verify;

pub use barycenter::{
    barycentric_weights, batch_barycenter, BarycenterState, ComplexAccumulator, TestPoint,
    WeightExponent,
};
pub use error::{Error, OracleError, Result};
pub use linalg::Matrix;
pub use oracles::{Objective, ObjectiveKind, Oracle};
pub use search::{run, CovarianceMode, RunTrace, SearchConfig, StepRecord, VarianceSchedule};
