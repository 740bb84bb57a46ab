//! Error type shared by every module.

use thiserror::Error;

/// Library error.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("non-finite {what} at coordinate {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("degenerate Hessian: |lambda| = {value:e} below {threshold:e}")]
    DegenerateHessian { value: f64, threshold: f64 },

    #[error("grouping inconsistency: {0}")]
    Grouping(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("not a descent direction: lambda_min = {0}")]
    NotDescent(f64),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn regime<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Regime(msg.into()))
}
