use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NonHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("trace is not 1 (got {0})")]
    BadTrace(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("not a probability distribution: {0}")]
    NotDistribution(String),

    #[error("invalid target dimension m = {0} (need m >= 1)")]
    BadM(f64),

    #[error("optimizer did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("ill-posed problem: {0}")]
    IllPosed(String),

    #[error("dimension {0} is too large for this construction (max 3)")]
    DimTooLarge(usize),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("state vector is not a purification of the given state: {0}")]
    NotAPurification(String),

    #[error("ensemble average does not match the reduced state (residual {0:.3e})")]
    IncompatibleEnsemble(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
