//! Config-driven runner: builds a model from JSON, runs the selected
//! pipeline stages and writes `report.json` plus plot-ready CSV series.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub mod config;
pub mod pipeline;
pub mod report;

pub use config::{Pipeline, RunConfig};
pub use pipeline::{execute, run, Command, RunOutcome};
pub use report::{RunReport, Series};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("report serialization failed: {0}")]
    Report(String),
}
