use thiserror::Error;

use crate::bicop::Family;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters {params:?} for {family}: {reason}")]
    InvalidParams {
        family: Family,
        params: Vec<f64>,
        reason: String,
    },

    #[error("{what} = {value} is outside its domain")]
    Domain { what: &'static str, value: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("Kendall's tau {tau} is not attainable by {family}")]
    OutOfRange { family: Family, tau: f64 },

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("no candidate family could be fitted")]
    AllFitsFailed,

    #[error("bins of {per_bin} observations are too small (need at least {needed})")]
    BinTooSmall { per_bin: usize, needed: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(family: Family, params: &[f64], reason: impl Into<String>) -> Self {
        Error::InvalidParams {
            family,
            params: params.to_vec(),
            reason: reason.into(),
        }
    }
}
