use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("field mismatch: operands belong to different number fields")]
    FieldMismatch,

    #[error("inverse of zero in number field")]
    ZeroInverse,

    #[error("not a valid minimal polynomial: {0}")]
    BadMinimalPolynomial(String),

    #[error("conjugate embedding precision: {0}")]
    EmbeddingPrecision(String),

    #[error("invalid IFS: {0}")]
    InvalidIfs(String),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("inconsistent separation assertions: {0}")]
    InconsistentAssertions(String),

    /// A theorem-guaranteed invariant was violated at run time; this always
    /// indicates an implementation or input-data bug, never a tight bound.
    #[error("correctness alarm: {0}")]
    CorrectnessAlarm(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
