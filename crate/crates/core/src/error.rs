use thiserror::Error;

/// Errors raised by the geometry, optimization and quadrature routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("point {point:?} lies outside the chart domain ({domain})")]
    ChartDomain { point: Vec<f64>, domain: String },

    #[error("generator rejected its output: {0}")]
    Generator(String),

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("pullback failed: {0}")]
    Pullback(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("division by a vanishing quantity: {0}")]
    Division(String),

    #[error("optimization failed after {iterations} iterations: {reason}")]
    Optimization {
        reason: String,
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("eigensolver did not converge: {0}")]
    Eigen(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("unsupported quadrature: {0}")]
    UnsupportedQuadrature(String),

    #[error("missing dependency: {0}")]
    Dependency(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
