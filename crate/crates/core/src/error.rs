use thiserror::Error;

/// Errors produced by the extrapolation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("eps must be in (0,1), got {0}")]
    EpsOutOfRange(f64),

    #[error("no extrapolation possible: eps = {eps} gives degree 0 for this class")]
    NoExtrapolation { eps: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degree {degree} out of range (max {max})")]
    DegreeOutOfRange { degree: usize, max: usize },

    #[error("underdetermined least squares: {rows} residual terms for {unknowns} unknowns")]
    Underdetermined { rows: usize, unknowns: usize },

    #[error("design matrix is rank deficient at basis degree {degree}")]
    RankDeficient { degree: usize },

    #[error("invalid samples: {0}")]
    InvalidSamples(String),

    #[error("sampling grid rejected: {0}")]
    GridRejected(String),

    #[error("no threshold fixed point in (0,1) for z0 = {z0}")]
    NoFixedPoint { z0: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
