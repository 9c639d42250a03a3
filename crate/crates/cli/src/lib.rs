//! Scenario-driven experiment runner for rank-scoring contests.
//!
//! Each `cmd_*` function reads a [`Scenario`], writes its CSV files under
//! [`Options::output`] and returns a small report for the terminal.

pub mod commands;
pub mod scenario;

use thiserror::Error;

pub use commands::{cmd_equilibrium, cmd_exploit, cmd_netvalue, cmd_simulate, cmd_voter, Options};
pub use scenario::{RuleSpec, Scenario, ValuesSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("self-check failed: {0}")]
    SelfCheck(String),
    #[error(transparent)]
    Core(#[from] rankbid_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// 2 for a failed self-check, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SelfCheck(_) => 2,
            _ => 1,
        }
    }
}
