use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Raised by LU inversion; the caller decides how to account for the lost subcarrier.
    #[error("matrix is singular or ill-conditioned (reciprocal condition {rcond:.3e})")]
    Singular { rcond: f64 },

    #[error("matrix is not Hermitian")]
    NotHermitian,

    #[error("matrix is indefinite (smallest eigenvalue {0:.3e})")]
    Indefinite(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exhaustive search over {0} candidates exceeds the enumeration guard")]
    SearchSpaceTooLarge(u128),

    #[error("cyclic prefix of {cp_len} samples cannot absorb a {n_taps}-tap channel")]
    CyclicPrefixTooShort { cp_len: usize, n_taps: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}
