use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("integration step underflow at t = {t}: step {step:e} below minimum {min_step:e} (stiff system?)")]
    Stiffness { t: f64, step: f64, min_step: f64 },

    #[error("solver diverged at t = {t}: {hint}")]
    Divergence { t: f64, hint: String },

    #[error("accuracy {target:e} not reached within a budget of {budget} steps")]
    Budget { target: f64, budget: usize },

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    TrainingDiverged { epoch: usize, batch: usize, loss: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("checkpoint header mismatch: expected {expected:?}, found {found:?}")]
    Header { expected: String, found: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
