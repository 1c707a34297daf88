use std::io;
use std::path::PathBuf;

use dirac_core::DiracError;
use thiserror::Error;

use crate::run::RunSummary;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot build system: {0}")]
    System(#[source] DiracError),
    #[error("{}: {source}", path.as_ref().map_or("<stdout>".into(), |p| p.display().to_string()))]
    Io {
        path: Option<PathBuf>,
        #[source]
        source: io::Error,
    },
    /// Raised after the partial trajectory has been written.
    #[error("step producing point {index} failed: {source}")]
    Step {
        index: usize,
        #[source]
        source: DiracError,
        summary: RunSummary,
    },
}

impl RunError {
    /// Process exit code: 1 for validation and I/O errors, 2 for step failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Step { .. } => 2,
            _ => 1,
        }
    }
}
