use thiserror::Error;

/// Errors surfaced by model construction, solvers and the grid oracle.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("calibration infeasible: {0}")]
    CalibrationInfeasible(String),

    #[error("solver failed: {0}")]
    SolverFailure(String),

    #[error("grid has {points} nodes, exceeding the resource guard of {limit}")]
    GridTooLarge { points: u64, limit: u64 },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("scenario file: {0}")]
    ScenarioFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
