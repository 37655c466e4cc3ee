use thiserror::Error;

/// Library-wide error type. Construction errors carry the measured deviation
/// so callers can tell a borderline input from a structurally wrong one.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension {0} unsupported, expected 2, 3, or 4")]
    UnsupportedDim(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("matrix is not skew-Hermitian (deviation {0:.3e})")]
    NotSkewHermitian(f64),

    #[error("matrix is not real skew-symmetric (deviation {0:.3e})")]
    NotRealSkew(f64),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not special (|det - 1| = {0:.3e})")]
    NotSpecial(f64),

    #[error("matrix is not real orthogonal (deviation {0:.3e})")]
    NotRealOrthogonal(f64),

    #[error("kron is only defined for 2x2 factors, got {0}x{0} and {1}x{1}")]
    KronDim(usize, usize),

    #[error("{0}")]
    SingularInput(String),

    #[error("generators are proportional: {0}")]
    ProportionalGenerators(String),

    #[error("target is unreachable: {0}")]
    Unreachable(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
