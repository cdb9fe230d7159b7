//! Experiment runner behind the `lokilab` binary.
//!
//! Every run writes `<out>.csv` and `<out>.json`, plus `<out>.svg` with `--svg`.
//! Output is a pure function of the resolved configuration and seed.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::fmt;
use std::io;

use serde_json::json;

pub use config::{Command, ExperimentConfig, SchemaError};
pub use output::ArtifactPaths;

#[derive(Debug)]
pub enum CliError {
    Schema(SchemaError),
    Numerical {
        module: &'static str,
        source: lokilab::Error,
    },
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(e) => write!(f, "configuration error: {e}"),
            CliError::Numerical { module, source } => write!(f, "numerical failure in {module}: {source}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        CliError::Schema(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: serde_json::Value,
    pub paths: ArtifactPaths,
}

/// JSON summary: resolved configuration, headline numbers, verdict.
pub fn summarize(config: &ExperimentConfig, report: &commands::Report) -> serde_json::Value {
    json!({
        "schema": output::SCHEMA_VERSION,
        "command": config.command.name(),
        "config": config.echo(),
        "csv_columns": report.table.columns,
        "results": report.results,
        "pass": report.pass,
    })
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let report = commands::dispatch(config)?;
    let summary = summarize(config, &report);
    let svg = if config.svg {
        report.plot.as_ref().map(svg::Plot::render)
    } else {
        None
    };
    let paths = output::write_artifacts(&config.output_path, &report.table, &summary, svg.as_deref())?;
    Ok(RunOutcome { summary, paths })
}
