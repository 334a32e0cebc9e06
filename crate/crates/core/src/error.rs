use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("loss family {family} does not match supervising variable of kind {variant}")]
    FamilyMismatch {
        family: &'static str,
        variant: &'static str,
    },

    #[error("invalid supervising variable: {0}")]
    InvalidResponse(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0} has no link function")]
    NoLink(&'static str),

    #[error("no regularization level reaches {target} clusters; achievable counts: {achievable:?}")]
    TargetUnreachable { target: usize, achievable: Vec<usize> },

    #[error("stability selection found no non-trivial regularization level")]
    NoSelection,

    #[error("unsupported scenario: {0}")]
    Unsupported(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
