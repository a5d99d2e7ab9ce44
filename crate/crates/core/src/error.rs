use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {nx}x{ny}x{nz}: every axis needs at least 3 grid points")]
    InvalidDims { nx: usize, ny: usize, nz: usize },

    #[error("({i},{j},{k}) is not an interior cell")]
    OutOfRange { i: usize, j: usize, k: usize },

    #[error("elapsed seconds must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("graph validation failed: {0}")]
    InvalidGraph(String),

    #[error("simulation made no progress at cycle {cycle}; blocked entities: {blocked}")]
    Deadlock { cycle: u64, blocked: String },

    #[error("profile does not belong to this graph: {0}")]
    ProfileMismatch(String),

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("invalid kernel config: {0}")]
    InvalidConfig(String),

    #[error("malformed profile CSV: {0}")]
    ProfileParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
