use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("sub-system {subsystem}: success reported for a slot it was not scheduled in")]
    ProtocolViolation { subsystem: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error(
        "Riccati iteration did not converge within {iterations} iterations (residual {residual:e})"
    )]
    RiccatiNonConvergence { iterations: usize, residual: f64 },

    #[error("R + B'PB is singular; cannot form the feedback gain")]
    SingularGain,

    #[error("estimator needs {needed} past inputs but only {available} are recorded")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("age must be at least 1, got {0}")]
    InvalidAge(u64),

    #[error("action {action} is not admissible in the current state")]
    InadmissibleAction { action: String },

    #[error("closed-form PMF supports at most 3 hops, chain has {0}")]
    UnsupportedHops(usize),

    #[error("loss probabilities {a} and {b} are too close for the closed form; use the convolution oracle")]
    NearSingular { a: f64, b: f64 },

    #[error("confidence interval needs at least 2 runs, got {0}")]
    TooFewRuns(usize),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.into(),
        reason: reason.into(),
    }
}
