//! Scenario configuration, run orchestration, verification studies and the
//! on-disk formats of the `relfluid` command-line tool.

pub mod config;
pub mod io;
pub mod run;
pub mod studies;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Model(#[from] relfluid::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    /// 2 for bad input, 3 for a model error during a run, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 2,
            CliError::Model(_) => 3,
            CliError::Io(_) | CliError::CheckFailed(_) => 1,
        }
    }
}
