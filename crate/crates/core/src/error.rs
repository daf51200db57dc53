use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure reported by an objective oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("query has dimension {found}, objective expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("objective returned a non-finite value {value} at {x:?}")]
    NonFinite { value: f64, x: Vec<f64> },
    #[error("oracle failed: {0}")]
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no test points given")]
    EmptyPoints,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },
    #[error("weight exponent must have a positive real part, got {re}{im:+}i")]
    InvalidExponent { re: f64, im: f64 },
    #[error("operation requires a real weight exponent, got imaginary part {0}")]
    ComplexExponent(f64),
    #[error("coordinate {index} is {value} after the domain shift; the complex barycenter needs x >= 0")]
    NegativeCoordinate { index: usize, value: f64 },
    #[error("complex barycenter denominator vanished (|denominator| = {magnitude:e})")]
    DegenerateInterference { magnitude: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown objective {0:?}; expected rosenbrock, perturbed_quadratic, canoe or quadratic")]
    UnknownObjective(String),
    #[error("objective {0} has no analytic gradient and finite differences are disabled")]
    GradientUnavailable(String),
    #[error("objective {0} has no analytic Hessian")]
    HessianUnavailable(String),
    #[error("evaluation of point {index} failed: {source}")]
    Evaluation {
        index: usize,
        #[source]
        source: OracleError,
    },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
