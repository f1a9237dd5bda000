use std::path::PathBuf;

use rosensweig_core::Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] Error),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Process exit codes. These are part of the command-line contract.
pub mod exit {
    pub const NUMERICAL: i32 = 1;
    pub const INVALID_ARGUMENT: i32 = 2;
    pub const NO_MAXIMUM: i32 = 3;
    pub const CONVERGENCE: i32 = 4;
    pub const IO: i32 = 5;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => exit::INVALID_ARGUMENT,
            CliError::Io { .. } => exit::IO,
            CliError::Core(e) => match e {
                Error::InvalidArgument(_) | Error::Domain(_) | Error::UnsupportedOrder(..) => {
                    exit::INVALID_ARGUMENT
                }
                Error::NoPositiveMaximum { .. } => exit::NO_MAXIMUM,
                Error::ConvergenceFailure { .. } | Error::Divergence(_) => exit::CONVERGENCE,
                Error::NotInRange(_)
                | Error::NearResonance { .. }
                | Error::DegenerateTransversality(_)
                | Error::WrongBranchType(_) => exit::NUMERICAL,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
