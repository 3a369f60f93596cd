use thiserror::Error;

/// Errors produced by data validation, the numerical kernels and the estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MvmrError {
    /// Malformed input file; `row` is the 1-based file line (the header is line 1), `column` the header name.
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    /// Violates a modelling assumption (rank, dimensions, standard errors).
    #[error("model error: {0}")]
    Model(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("solver did not converge after {iterations} iterations: {detail}")]
    NoConvergence { iterations: usize, detail: String },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MvmrError {
    fn from(e: std::io::Error) -> Self {
        MvmrError::Io(e.to_string())
    }
}

impl From<csv::Error> for MvmrError {
    fn from(e: csv::Error) -> Self {
        MvmrError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MvmrError>;
