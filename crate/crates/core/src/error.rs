// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised across ingestion, estimation and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series too short: T = {0}, need T >= 2")]
    TooShort(usize),

    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("row {row}: expected {expected} columns, found {found}")]
    Width {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("feature family needs dimension {expected}, sample has {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("lag embedding with p = {p} needs more than {p} observations, got {t}")]
    LagTooLarge { p: usize, t: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("smoother weights vanish at t = {0}; increase the bandwidth")]
    ZeroWeights(usize),

    #[error("HAC lag window reaches lag {lag} but T = {t}")]
    BandwidthTooLarge { lag: usize, t: usize },

    #[error("long-run variance estimate {0} is not positive; use a larger HAC bandwidth or the Bartlett kernel")]
    NonPositiveVariance(f64),

    #[error("increment covariance at grid step {0} cannot be factorized")]
    Factorization(usize),

    #[error("at least {min} simulation draws are required, got {got}")]
    InsufficientDraws { min: usize, got: usize },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
