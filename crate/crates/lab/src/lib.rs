//! Scenario runner, file formats, reference oracles and the acceptance suite
//! for [`nlkpp_core`].

use std::path::PathBuf;

pub mod io;
pub mod oracle;
pub mod runner;
pub mod scenario;
pub mod shipped;
pub mod verify;

pub use runner::{run, RunConfig, Summary};
pub use scenario::{Experiment, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("scenario `{scenario}`: {message}")]
    Config { scenario: String, message: String },
    #[error(transparent)]
    Numerics(#[from] nlkpp_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// Process exit status: 2 for unusable input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Io { .. } | LabError::Parse { .. } | LabError::Config { .. } => 2,
            LabError::Numerics(nlkpp_core::Error::Precondition(_))
            | LabError::Numerics(nlkpp_core::Error::InvalidDomain(_))
            | LabError::Numerics(nlkpp_core::Error::InvalidKernel(_))
            | LabError::Numerics(nlkpp_core::Error::InvalidCoefficient(_))
            | LabError::Numerics(nlkpp_core::Error::Aliasing { .. }) => 2,
            _ => 1,
        }
    }
}
