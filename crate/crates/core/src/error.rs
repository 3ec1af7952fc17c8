use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrecodingError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("effective precoder S_t P_t F_BB is zero; cannot normalize")]
    DegeneratePrecoder,
    #[error("exhaustive switch search needs 2^{n_ps} candidates per row, limit is 2^{limit}")]
    Capacity { n_ps: usize, limit: usize },
    #[error("combiner W_RF W_BB is rank deficient; post-combining noise covariance is singular")]
    RankDeficientCombiner,
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, PrecodingError>;

pub(crate) fn mismatch(what: impl Into<String>) -> PrecodingError {
    PrecodingError::DimensionMismatch(what.into())
}
