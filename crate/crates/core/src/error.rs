use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("edge set on {n} nodes is disconnected")]
    Disconnected { n: usize },

    #[error("no connected Erdős–Rényi sample for n={n}, p={p} after {attempts} attempts")]
    RetryBudgetExhausted { n: usize, p: f64, attempts: usize },

    #[error("non-finite solver state at outer iteration {k}")]
    NonFinite { k: usize },

    #[error("solution bound R is required for this operation")]
    MissingBound,

    #[error("certificate fit infeasible at coordinate {coord}: unassigned mass {residual:e}")]
    CertificateInfeasible { coord: usize, residual: f64 },
}
