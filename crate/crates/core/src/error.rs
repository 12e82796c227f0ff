use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("alist parse error at line {line}: {msg}")]
    Alist { line: usize, msg: String },

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("invalid traffic parameters: {0}")]
    Traffic(String),

    #[error("unknown user {user} referenced in slot {slot}")]
    UnknownUser { slot: usize, user: usize },

    #[error("inconsistent frame system: {0}")]
    Inconsistent(String),

    #[error("truncation tail {tail:.3e} exceeds tolerance {tolerance:.3e}: {what}")]
    Truncation { what: String, tail: f64, tolerance: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed table: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
