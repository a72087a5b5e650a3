use thiserror::Error;

/// Errors produced anywhere in the exploration pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system specification: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter vector: {0}")]
    InvalidParameter(String),

    #[error("integration diverged at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },

    #[error("amplitude {amplitude} lies outside the frequency response curve")]
    NegativeDiscriminant { amplitude: f64 },

    #[error("signal too short: need {needed} samples after trimming, have {available}")]
    TooShort { needed: usize, available: usize },

    #[error("invalid embedding configuration: {0}")]
    InvalidEmbedding(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("covariance matrix is not positive definite, even with jitter")]
    NotPositiveDefinite,

    #[error("candidate pool is empty after excluding sampled points")]
    EmptyPool,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error(
        "initial batch of {samples} samples produced no clusters ({noise} noise points); \
         loosen eps or min_pts"
    )]
    DegenerateClustering { samples: usize, noise: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
