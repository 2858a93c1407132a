//! Scenario-driven front end for the hybrid parallel QKD simulator.
//!
//! The binary wraps [`commands::run`]; everything is also usable as a
//! library so tests can drive commands without spawning processes.

pub mod commands;
pub mod report;
pub mod scenario;
pub mod verify;

pub use commands::{run, Command, Overrides, RunSummary};
pub use scenario::{LoadedScenario, Scenario};

/// Process exit statuses.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const RUNTIME: i32 = 3;
    pub const CHECK_FAILED: i32 = 4;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("verification failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Runtime(_) => exit::RUNTIME,
            CliError::CheckFailed(_) => exit::CHECK_FAILED,
        }
    }

    /// Parameter problems are configuration errors; anything else the
    /// simulator raises is a runtime error.
    pub fn from_core(e: hpqkd_core::Error) -> Self {
        use hpqkd_core::Error as E;
        match e {
            E::InvalidParameter { .. }
            | E::NotCommensurate(..)
            | E::Nyquist { .. }
            | E::NotTuned { .. }
            | E::ModeMismatch { .. } => CliError::Config(e.to_string()),
            E::LengthMismatch { .. } | E::Empty(_) => CliError::Runtime(e.to_string()),
        }
    }
}
