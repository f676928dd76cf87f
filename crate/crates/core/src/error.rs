use thiserror::Error;

/// Errors produced by the planner, the bound evaluator and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid {entity}: {reason}")]
    Validation { entity: String, reason: String },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("unstable operating point: speed {speed} does not exceed offered work rate {demand}")]
    Stability { speed: f64, demand: f64 },

    #[error("no feasible speed in [{speed_min}, {speed_max}]; required speed {required:?}")]
    InfeasibleSpeed {
        /// Smallest speed satisfying the SLA, when one exists outside the box.
        required: Option<f64>,
        speed_min: f64,
        speed_max: f64,
    },

    #[error("degenerate server aggregate: no flow with positive routing probability")]
    Degenerate,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty sample")]
    EmptySample,

    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(entity: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            entity: entity.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
