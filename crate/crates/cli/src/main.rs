//! `regimelab` command-line tool.
//!
//! Exit codes: 0 success, 1 self-test failure, 2 configuration error,
//! 3 divergence, 4 I/O failure.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use regimelab::io::ConfigError;
use regimelab::{AnalysisError, FilterError, IntegrateError};

#[derive(Debug, Parser)]
#[command(name = "regimelab", version, about = "Simulate, classify, and sweep the three-variable reaction model")]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Diverged(String),
    Io(String),
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Diverged(m) => write!(f, "diverged: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<IntegrateError> for CliError {
    fn from(e: IntegrateError) -> Self {
        match e {
            IntegrateError::InvalidSpec { field, reason } => {
                CliError::Config(ConfigError::Constraint { key: field.to_string(), message: reason })
            }
            IntegrateError::StepCapExceeded { .. } => {
                CliError::Config(ConfigError::Constraint { key: "dt".into(), message: e.to_string() })
            }
            other => CliError::Diverged(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Integrate(e) => e.into(),
            AnalysisError::Diverged { .. } | AnalysisError::Degenerate => CliError::Diverged(e.to_string()),
            AnalysisError::TooShort { .. } => CliError::Config(ConfigError::Constraint {
                key: "t_end".into(),
                message: format!("{e}; lengthen t_end or shrink dt"),
            }),
            other => CliError::Config(ConfigError::Constraint { key: "analysis".into(), message: other.to_string() }),
        }
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        let key = match &e {
            FilterError::Amplitude(_) => "noise_amplitude",
            FilterError::Window => "filter_window",
            FilterError::Alpha(_) => "filter_alpha",
            FilterError::Integrate(e) => return e.clone().into(),
        };
        CliError::Config(ConfigError::Constraint { key: key.into(), message: e.to_string() })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("regimelab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
