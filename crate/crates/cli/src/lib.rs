//! Experiment harness for the `compgrad` command-line tool.
//!
//! Each command reads an [`ExperimentConfig`], runs the library and writes
//! CSV trajectories or JSON reports. Commands return an [`ExitStatus`];
//! errors map to exit code 1.

mod commands;
pub mod config;
mod output;

use std::path::PathBuf;

use compgrad_core::CompGradError;

pub use commands::{cmd_coherence, cmd_flow, cmd_rates, cmd_run, cmd_sweep, execute, RunOptions};
pub use config::{ExperimentConfig, Mode, PointSpec};
pub use output::{format_float, TRAJECTORY_HEADER, FLOW_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CompGradError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok,
    Diverged,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Ok => 0,
            ExitStatus::Diverged => 2,
        }
    }
}
