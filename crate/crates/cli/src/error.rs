//! Errors of the command-line front end and their exit codes.

use std::path::Path;

use thiserror::Error;

/// Failures that stop a command before it can report check results.
#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration could not be parsed or is out of range.
    #[error("config error in {origin}: {message}")]
    Config { origin: String, message: String },

    /// A file could not be read or written.
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    /// A file had unexpected content.
    #[error("{path}: {message}")]
    Format { path: String, message: String },

    /// A previous stage's output is missing from the run directory.
    #[error("missing input: {0}")]
    MissingInput(String),

    /// Invalid combination of command-line arguments.
    #[error("usage: {0}")]
    Usage(String),

    /// The run did not blow up although the command needs a blow-up time.
    #[error("no blow-up: {0}")]
    NoBlowup(String),

    /// A numerical routine failed.
    #[error(transparent)]
    Core(#[from] blowup_core::Error),
}

impl CliError {
    /// Wraps an I/O error with its path.
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    /// Process exit code: 3 for a missing blow-up, 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::NoBlowup(_) | Self::Core(blowup_core::Error::NoBlowup { .. }) => exit::NO_BLOWUP,
            _ => exit::USAGE,
        }
    }
}

/// Exit-code contract.
pub mod exit {
    /// All checks passed.
    pub const OK: u8 = 0;
    /// At least one check failed.
    pub const CHECK_FAILED: u8 = 1;
    /// Usage, configuration, input or numerical error.
    pub const USAGE: u8 = 2;
    /// The run did not blow up although blow-up was required.
    pub const NO_BLOWUP: u8 = 3;
}

/// Result alias of the front end.
pub type Result<T> = std::result::Result<T, CliError>;
