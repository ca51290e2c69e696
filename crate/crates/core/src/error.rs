use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("potential rejected: {0}")]
    PotentialRejected(String),

    #[error("argument {value} lies on the branch cut {cut}")]
    BranchCut { value: String, cut: &'static str },

    #[error("truncation dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("quadrature cannot resolve the request: {0}")]
    Quadrature(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("representation mismatch: {0}")]
    Representation(String),

    #[error("contour unsafe: {0}")]
    ContourUnsafe(String),

    #[error("index did not converge to an integer (value {value}, residual {residual:e})")]
    NonIntegerIndex { value: f64, residual: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;
