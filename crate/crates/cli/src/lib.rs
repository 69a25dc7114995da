//! File formats, configuration, and command plumbing for the `wgcn`
//! binary. The numerical pipeline itself lives in `wgcn-core`; this
//! crate reads TSV datasets and JSON configs, drives the pipeline, and
//! writes reports, checkpoints, and dump files.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod io;
pub mod report;

use std::fmt;
use std::process::ExitCode;

use wgcn_core::train::TrainError;

/// A command failure, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or an invalid configuration; exits with 1.
    Usage(String),
    /// Unreadable or malformed input data; exits with 2.
    Data(String),
    /// Training left the finite range; exits with 3.
    Numeric(String),
}

impl CliError {
    /// Process exit code this error maps to.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
            CliError::Numeric(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
            CliError::Numeric(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<io::DataError> for CliError {
    fn from(e: io::DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        use wgcn_core::model::ModelError;
        use wgcn_core::reconstruct::ReconError;
        match &e {
            TrainError::NumericFailure { .. }
            | TrainError::Model(ModelError::NonFinite { .. }) => CliError::Numeric(e.to_string()),
            TrainError::InvalidWalk { .. }
            | TrainError::Recon(ReconError::AlphaOutOfRange { .. })
            | TrainError::Recon(ReconError::InvalidLambda { .. })
            | TrainError::Model(ModelError::InvalidHyper { .. }) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}
