use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),
    #[error("singular design: {0}")]
    SingularDesign(String),
    #[error("unstable ratio: slope {slope:e} is within 3 standard errors of zero (sd {sd:e})")]
    UnstableRatio { slope: f64, sd: f64 },
    #[error("non-uniform variance: max/min ratio {ratio:.3} exceeds {limit}")]
    NonUniformVariance { ratio: f64, limit: f64 },
    #[error("underdetermined system: {rows} rows for {cols} unknowns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("singular system (condition number {condition:e})")]
    SingularSystem { condition: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
