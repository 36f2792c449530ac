//! Command implementations behind the `steernet` binary: synthetic dataset
//! generation, filter-bank export, network initialization, training,
//! explanation, pruning, evaluation, and the progressive zeroing sweep.

pub mod commands;
pub mod config;
pub mod data;

use std::fmt;
use std::process::ExitCode;

/// Error classes map to process exit codes: config 2, io 3, numeric 4.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numeric(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Io(m) => write!(f, "io error: {m}"),
            Self::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Config(_) => ExitCode::from(2),
            Self::Io(_) => ExitCode::from(3),
            Self::Numeric(_) => ExitCode::from(4),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<steernet::netgraph::SerialError> for CliError {
    fn from(e: steernet::netgraph::SerialError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<steernet::netgraph::GraphError> for CliError {
    fn from(e: steernet::netgraph::GraphError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<steernet::engine::EngineError> for CliError {
    fn from(e: steernet::engine::EngineError) -> Self {
        match e {
            steernet::engine::EngineError::Divergence { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<steernet::filterbank::FilterError> for CliError {
    fn from(e: steernet::filterbank::FilterError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<steernet::explainsteer::ExplainError> for CliError {
    fn from(e: steernet::explainsteer::ExplainError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<steernet::channelprune::PruneError> for CliError {
    fn from(e: steernet::channelprune::PruneError) -> Self {
        CliError::Config(e.to_string())
    }
}
