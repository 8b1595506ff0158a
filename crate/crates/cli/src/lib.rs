//! `bladefdi simulate` and `bladefdi sweep`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod schema;
pub mod simulate;
pub mod sweep;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "BLADEFDI_OUT";

#[derive(Debug, Parser)]
#[command(name = "bladefdi", version, about = "Blade-chipping fault isolation on a simulated multirotor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fly one configuration and write its trace, spectra and verdict.
    Simulate(SimulateArgs),
    /// Run a factorial grid and write ROC, confusion and accuracy tables.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML run configuration; omitted keys keep their defaults, so no file is the demo flight.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Flight duration (s).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Output directory. Falls back to $BLADEFDI_OUT, then the config's `output`, then `out`.
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML sweep grid; omitted keys keep the full 480-flight design.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Worker threads (0 picks one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Reuse cells already stored under the output directory.
    #[arg(long)]
    pub resume: bool,
    /// Evaluate all thresholds from one flight per cell instead of one flight per threshold.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub replay_thresholds: bool,
    /// Output directory. Falls back to $BLADEFDI_OUT, then `out`.
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    /// Suppress per-cell progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Diverged(String),
    #[error("{failed} of {total} cells failed; see index.json")]
    CellsFailed { failed: usize, total: usize },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Other(#[from] bladefdi_experiments::ExperimentError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Diverged(_) => 3,
            Self::CellsFailed { .. } => 4,
            Self::Io { .. } | Self::Other(_) => 1,
        }
    }

    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |e| Self::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => simulate::simulate(&args).map(|_| ()),
        Command::Sweep(args) => sweep::sweep(&args).map(|_| ()),
    }
}
