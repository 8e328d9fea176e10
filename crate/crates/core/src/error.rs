use thiserror::Error;

/// Errors surfaced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("speed must be non-negative, got {0}")]
    NegativeSpeed(f64),

    #[error("predicted next-step gap must be positive, got {0}")]
    NonPositiveGap(f64),

    #[error("kalman gain must lie strictly inside (0, 1), got {0}")]
    GainOutOfRange(f64),

    #[error("measurement must be finite, got {0}")]
    NonFiniteMeasurement(f64),

    #[error("malformed trace: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
