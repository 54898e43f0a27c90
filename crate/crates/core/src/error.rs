use thiserror::Error;

use crate::env::ConstraintViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("undefined link geometry: UAV and ground user coincide")]
    UndefinedGeometry,

    #[error("altitude {altitude} m is infeasible: communication radius is zero")]
    InfeasibleAltitude { altitude: f64 },

    #[error("planning failed after {iterations} iterations")]
    PlanningFailure { iterations: usize },

    #[error("constraint violated: {0}")]
    Constraint(#[from] ConstraintViolation),

    #[error("non-finite training signal: {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },
}
