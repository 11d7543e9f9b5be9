use thiserror::Error;

use crate::model::Sector;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system parameters: {0}")]
    InvalidSpec(String),

    #[error("expected a {expected} state or matrix, found {found}")]
    SectorMismatch { expected: Sector, found: Sector },

    #[error("state and decomposition live on different bases ({left} vs {right} states)")]
    BasisMismatch { left: usize, right: usize },

    #[error("eigensolver failed on a {rows}x{cols} matrix: {message}")]
    Solver {
        rows: usize,
        cols: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("boundary occupancy {occupancy:.3e} exceeds {limit:.0e} at t = {time}; increase M")]
    BoundaryGuard {
        occupancy: f64,
        limit: f64,
        time: f64,
    },

    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Json(_) | Error::InvalidSpec(_) | Error::InvalidArgument(_) => 2,
            Error::BoundaryGuard { .. } | Error::Invariant(_) | Error::Solver { .. } => 3,
            _ => 1,
        }
    }
}
