//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by dataset construction, weight estimation, and solving.
#[derive(Debug, Error)]
pub enum Error {
    /// The outcome of a record censored before the horizon is undefined.
    #[error("outcome unobserved: record censored at {exit_time} before horizon {horizon}")]
    OutcomeUnobserved { exit_time: f64, horizon: f64 },

    /// A stratum label in `0..stratum_count` has no records.
    #[error("stratum {stratum} is empty")]
    StratumEmpty { stratum: usize },

    /// A leave-one-out refit needs at least two records in the stratum.
    #[error("stratum {stratum} has fewer than 2 records; cannot leave one out")]
    StratumTooSmall { stratum: usize },

    /// A weight was demanded where the estimated censoring survival is zero.
    #[error(
        "positivity violation in stratum {stratum}: censoring survival reaches 0 before time {time} where a weight is required"
    )]
    PositivityViolation { stratum: usize, time: f64 },

    /// Positivity failed inside a leave-one-out refit.
    #[error(
        "positivity violation after leaving out record {left_out} (stratum {stratum}, time {time})"
    )]
    LeaveOneOutPositivity {
        left_out: usize,
        stratum: usize,
        time: f64,
    },

    /// The score jacobian could not be inverted, even after step damping.
    #[error("singular score jacobian")]
    SingularSystem,

    /// Closed-form comparisons exist only for the two canonical contrasts.
    #[error("unsupported contrast vector: closed forms exist for (0,1) and (1,0) only")]
    UnsupportedContrast,

    /// Mismatched vector or matrix dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Invalid record, dataset, or configuration values.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Malformed CSV content; `row` is the 1-based data row.
    #[error("csv row {row}: {message}")]
    Csv { row: usize, message: String },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
