//! Error type shared across the crate.

use thiserror::Error;

/// Errors reported by profile construction, model fitting and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("window index {index} out of range 1..={count}")]
    WindowOutOfRange { index: usize, count: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty observation sequence")]
    EmptyObservations,

    #[error("observation at step {step} has zero probability under both states")]
    ImpossibleObservation { step: usize },

    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
