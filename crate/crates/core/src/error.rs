use std::path::PathBuf;

use thiserror::Error;

use crate::model::MeritVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("no merit for vertex {0}")]
    MissingMerit(usize),

    #[error("vertex set of size {size} is not strongly connected; the MLE does not exist or is not unique")]
    NotStronglyConnected { size: usize },

    #[error("fitting component {component}: {source}")]
    ComponentFit {
        component: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fit did not converge in {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Box<MeritVector>,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("student {0} has no assigned question")]
    ZeroDegreeStudent(usize),

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{path}:{line}: {message}")]
    MalformedRow { path: PathBuf, line: u64, message: String },

    #[error("{path}:{line}: duplicate edge ({student}, {question})")]
    DuplicateEdge {
        path: PathBuf,
        line: u64,
        student: String,
        question: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::ParameterOutOfRange(_) => 2,
            Error::MalformedRow { .. }
            | Error::DuplicateEdge { .. }
            | Error::DimensionMismatch(_)
            | Error::InvalidGraph(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Io(_) => 3,
            Error::NotStronglyConnected { .. }
            | Error::ComponentFit { .. }
            | Error::NonConvergence { .. }
            | Error::MissingMerit(_)
            | Error::ZeroDegreeStudent(_)
            | Error::InstanceTooLarge(_) => 4,
        }
    }
}
