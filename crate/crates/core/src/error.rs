use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("instance failed validation:\n{0}")]
    InvalidInstance(ValidationReport),

    #[error("no inverse: target {target} outside the range of the ramp (plateau {plateau})")]
    NoInverse { target: f64, plateau: f64 },

    #[error("degenerate domain: front s = {s} does not exceed a = {a}")]
    DegenerateDomain { a: f64, s: f64 },

    #[error("front collapse at t = {t}: s = {s} <= a = {a}")]
    FrontCollapse { t: f64, s: f64, a: f64 },

    #[error("boundary solve did not converge at t = {t} (last correction {residual:e})")]
    BoundarySolve { t: f64, residual: f64 },

    #[error("scheme configuration: {0}")]
    Scheme(String),

    #[error("config: {0}")]
    Config(String),

    #[error("run directory integrity: {0}")]
    Integrity(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attaches a failure time to step-level errors that carry one.
    pub(crate) fn at_time(self, time: f64) -> Self {
        match self {
            Error::FrontCollapse { s, a, .. } => Error::FrontCollapse { t: time, s, a },
            Error::BoundarySolve { residual, .. } => Error::BoundarySolve { t: time, residual },
            other => other,
        }
    }
}
