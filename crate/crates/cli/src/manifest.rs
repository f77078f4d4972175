use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::{Cli, CliError};

/// Everything needed to repeat a run, written next to its output.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub argv: Vec<String>,
    pub flags: &'a Cli,
    pub seed: u64,
    pub tol: f64,
    pub gamma_grid: &'a [f64],
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl<'a> RunManifest<'a> {
    pub fn new(cli: &'a Cli, grid: &'a [f64], output: &Path, elapsed: Duration) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: cli.command.name(),
            argv: std::env::args().collect(),
            flags: cli,
            seed: cli.global.seed,
            tol: cli.global.tol,
            gamma_grid: grid,
            outputs: vec![output.to_path_buf()],
            wall_clock_seconds: elapsed.as_secs_f64(),
        }
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write_beside(&self, output: &Path) -> Result<(), CliError> {
        let path = Self::path_for(output);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Numeric(e.to_string()))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| CliError::Input(format!("cannot write manifest {}: {e}", path.display())))
    }
}
