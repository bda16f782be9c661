use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("column {index} has zero norm")]
    DegenerateColumn { index: usize },

    #[error("non-finite value in {what} at row {row}, column {col}")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("gradient descent diverged at iteration {t} (max |component| = {max_abs:e})")]
    Divergence {
        t: usize,
        max_abs: f64,
        /// Last iterate whose components were all finite.
        last_finite_beta: Vec<f64>,
        last_finite_t: usize,
    },

    #[error("{what}: size {actual} exceeds limit {limit}; {hint}")]
    TooLarge {
        what: &'static str,
        actual: usize,
        limit: usize,
        hint: &'static str,
    },

    #[error("solver did not converge after {iters} iterations (KKT violation {kkt_violation:e})")]
    NotConverged {
        iters: usize,
        kkt_violation: f64,
        beta: Vec<f64>,
    },

    #[error("validation set is empty")]
    EmptyValidation,

    #[error("threshold window is empty: lower {lo:e} > upper {hi:e}")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: row {row}, column {col}: cannot parse {value:?} as a number")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        col: usize,
        value: String,
    },

    #[error("design has {x_rows} rows but response has {y_len} entries")]
    LengthMismatch { x_rows: usize, y_len: usize },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{count} of {total} replications failed (limit 10%)")]
    TooManyFailures { count: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error object.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Dimension(_) => "dimension",
            Error::DegenerateColumn { .. } => "degenerate_column",
            Error::NonFinite { .. } => "non_finite",
            Error::Divergence { .. } => "divergence",
            Error::TooLarge { .. } => "too_large",
            Error::NotConverged { .. } => "not_converged",
            Error::EmptyValidation => "empty_validation",
            Error::EmptyWindow { .. } => "empty_window",
            Error::RaggedRow { .. } => "ragged_row",
            Error::NonNumeric { .. } => "non_numeric",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Csv { .. } => "csv",
            Error::TooManyFailures { .. } => "replication_failures",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
