use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("density has zero mass on the grid")]
    ZeroMass,

    #[error("invalid density field: {0}")]
    InvalidDensity(String),

    #[error("reference density vanishes at cell {cell} where the other density is positive")]
    SupportMismatch { cell: usize },

    #[error("tridiagonal system is singular at row {row}")]
    SingularSystem { row: usize },

    #[error("negative density {value:e} at cell {cell} after step")]
    NegativeDensity { cell: usize, value: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("nonpositive value {value:e} at t = {t} inside the fit window")]
    NonPositiveValue { t: f64, value: f64 },

    #[error("sampling cadence is not uniform near t = {t}")]
    NonUniformCadence { t: f64 },

    #[error("offset |B(t)| = {offset} is not below 2*delta = {limit}; the four-set split does not apply")]
    DecompositionOutOfRange { offset: f64, limit: f64 },
}
