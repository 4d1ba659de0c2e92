//! Command-line front end for the payment-network library: demand
//! generation, tree and hub design, pricing, simulation, rewiring play, and
//! batch experiments with reproducible manifests.

pub mod commands;
pub mod experiments;
pub mod io;

/// What a successfully executed command reports back.
#[derive(Debug)]
pub enum RunStatus {
    /// Everything ran and every checked property held.
    Success,
    /// The run completed but flagged at least one failed property check.
    Flagged(String),
}

/// Why a command could not complete.
#[derive(Debug)]
pub enum CliError {
    /// The inputs or configuration were rejected before any work ran.
    Validation(String),
    /// The run itself failed.
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Internal(err)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "invalid input: {msg}"),
            CliError::Internal(err) => write!(f, "{err:#}"),
        }
    }
}
