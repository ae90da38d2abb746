use thiserror::Error;

use crate::sampler::ChainState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {value} (must be finite and > 0)")]
    InvalidParam { name: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid refined path: {0}")]
    InvalidPath(String),

    #[error("invalid observations: {0}")]
    InvalidObservations(String),

    /// Observation times that do not fall on the refined grid. Rows are
    /// zero-based positions in the observation sequence.
    #[error("observation times off the {dt} min grid at rows {rows:?}")]
    GridSnap { dt: f64, rows: Vec<usize> },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("covariance is not symmetric positive semidefinite: {0}")]
    NotPsd(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The chain hit a state it cannot continue from; the state is kept
    /// for inspection.
    #[error("chain failed at iteration {iteration}: {message}")]
    ChainFailure {
        iteration: usize,
        message: String,
        state: Box<ChainState>,
    },
}
