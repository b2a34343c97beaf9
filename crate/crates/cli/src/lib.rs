//! Configuration-driven runner around `freeharm-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::ValueEnum;

pub use config::RunConfig;
pub use error::{CliError, Result};
use output::Outputs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Minimize the energy and write the field, trace and report.
    Solve,
    /// Regularity diagnostics of a solved, fixture or file field.
    Diagnose,
    /// Reflect a half-domain field across the free boundary.
    Reflect,
    /// Sample an analytic fixture and compare its energy with the oracle.
    Fixtures,
    /// Repeat a fixture or solve over several mesh sizes.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Diagnose => "diagnose",
            Command::Reflect => "reflect",
            Command::Fixtures => "fixtures",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub written: Vec<String>,
}

/// Loads the configuration (defaults only when `config` is `None`), applies
/// `key=value` overrides and an optional output directory, and runs `cmd`.
///
/// A run that finishes without converging still writes its outputs and then
/// returns [`CliError::NotConverged`].
pub fn execute(cmd: Command, config: Option<&Path>, overrides: &[String], out: Option<&Path>) -> Result<RunSummary> {
    let mut cfg = match config {
        Some(path) => RunConfig::from_file(path, overrides)?,
        None => RunConfig::parse("", overrides, Path::new("."))?,
    };
    if let Some(dir) = out {
        cfg.set("output.dir", &dir.display().to_string())?;
    }
    let mut outputs = Outputs::new(&cfg)?;
    let res = match cmd {
        Command::Solve => commands::run_solve(&cfg, &mut outputs),
        Command::Diagnose => commands::run_diagnose(&cfg, &mut outputs),
        Command::Reflect => commands::run_reflect(&cfg, &mut outputs),
        Command::Fixtures => commands::run_fixtures(&cfg, &mut outputs),
        Command::Sweep => commands::run_sweep(&cfg, &mut outputs),
    };
    res.map(|()| RunSummary { dir: outputs.dir().clone(), written: outputs.written().to_vec() })
}
