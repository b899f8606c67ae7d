use std::path::PathBuf;
use std::process::ExitCode;

use frlstm_core::{ErrorClass, PipelineError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Format(String),
}

impl CliError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CliError::Pipeline(e) => e.class(),
            CliError::Io { .. } => ErrorClass::Io,
            CliError::Config(_) => ErrorClass::Config,
            CliError::Format(_) => ErrorClass::Format,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self.class() {
            ErrorClass::Io => 2,
            ErrorClass::Format => 3,
            ErrorClass::Config => 4,
            ErrorClass::Numerical => 5,
        })
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Pipeline(e.into())
            }
        }
    )*};
}

from_core!(
    frlstm_core::AudioError,
    frlstm_core::DatasetError,
    frlstm_core::NeuralError,
    frlstm_core::TransformError
);
