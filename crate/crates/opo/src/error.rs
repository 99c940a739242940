use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpoError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cavity geometry is unstable: 2R/L = {ratio} must exceed 1")]
    Geometry { ratio: f64 },
    #[error("operation requires an above-threshold pump (sigma > 1), got sigma = {0}")]
    BelowThreshold(f64),
    #[error("orientation undefined: signal amplitude is zero")]
    ZeroAmplitude,
    #[error("non-finite state in trajectory {trajectory} at step {step}")]
    NonFinite { trajectory: u64, step: u64 },
    #[error("minimizer failed to converge: {0}")]
    Minimizer(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parameter mismatch: {0}")]
    Mismatch(String),
    #[error("{diverged} of {total} trajectories diverged, above the allowed fraction {threshold}")]
    DivergenceThreshold { diverged: u64, total: u64, threshold: f64 },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for OpoError {
    fn from(e: std::io::Error) -> Self {
        OpoError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, OpoError>;
