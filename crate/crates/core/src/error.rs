use thiserror::Error;

use crate::solver::ConfigViolation;

pub type Result<T> = std::result::Result<T, BregError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BregError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("subgradient error: {0}")]
    Subgradient(String),

    #[error("unsupported pair: {0}")]
    UnsupportedPair(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("invariant violated at iteration {iter}: {msg}")]
    Invariant { iter: usize, msg: String },

    #[error("divergence at iteration {iter}: non-finite value in {what}")]
    Divergence { iter: usize, what: String },

    #[error("oracle found no KKT point: {0}")]
    NoSolution(String),

    #[error("oracle found two distinct KKT points (gap {gap:e})")]
    Ambiguity { gap: f64 },

    #[error("trajectory left the ball of radius {radius} at iteration {iter}")]
    UnboundedTrajectory { iter: usize, radius: f64 },

    #[error("{0}")]
    Config(ConfigViolation),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}
