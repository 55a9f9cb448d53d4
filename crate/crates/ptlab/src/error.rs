//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PtError {
    #[error("{context}: shape mismatch, expected {expected}, found {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix contains a non-finite entry")]
    NonFiniteEntry,

    #[error("tolerance must be nonnegative and finite (abs_eps={abs_eps}, rel_eps={rel_eps})")]
    InvalidTolerance { abs_eps: f64, rel_eps: f64 },

    #[error("matrix is not Hermitian within tolerance")]
    NotHermitian,

    #[error("Jacobi eigensolver did not converge")]
    EigNoConvergence,

    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("process is not causal (residual {residual:.3e})")]
    NotCausal { residual: f64 },

    #[error("induced marginal is not idempotent (residual {residual:.3e})")]
    NotIdempotent { residual: f64 },

    #[error("process is not completely positive")]
    NotCompletelyPositive,

    #[error("process is not a member of the constructed theory (residual {residual:.3e})")]
    NotMember { residual: f64 },

    #[error("process is not a leak (residual {residual:.3e})")]
    NotLeak { residual: f64 },

    #[error("canonical-form reconstruction failed (residual {residual:.3e})")]
    ReconstructionFailed { residual: f64 },

    #[error("parse error at line {line}, column {col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("dimension {0} exceeds the desk-scale cap for this operation")]
    DimensionCap(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
