use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("hypothesis error: |kappa2| = {kappa2_abs} must be strictly below kappa1 = {kappa1} (and kappa1 > 0, kappa2 != 0)")]
    Hypothesis { kappa1: f64, kappa2_abs: f64 },

    #[error("domain error: x = {x} outside [0, {length}]")]
    Domain { x: f64, length: f64 },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("shape error: expected length {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("singular matrix: zero pivot at index {index}")]
    Singular { index: usize },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("convergence error after {iterations} iterations: {detail} (max residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        detail: String,
    },

    #[error("alignment error: tau/dt = {ratio} is not an integer number of steps")]
    Alignment { ratio: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("trace error: {0}")]
    Trace(String),

    #[error("config error on line {line}: {message}")]
    Config { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
