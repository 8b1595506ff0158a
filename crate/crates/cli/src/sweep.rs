use std::fs;
use std::path::PathBuf;

use bladefdi_experiments::{run_sweep, write_artifacts, ExperimentError, SweepGrid, SweepOptions, SweepOutcome};

use crate::{CliError, SweepArgs};

pub fn load_grid(path: Option<&std::path::Path>) -> Result<SweepGrid, CliError> {
    let Some(path) = path else {
        return Ok(SweepGrid::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    SweepGrid::from_toml(&text).map_err(|e| match e {
        ExperimentError::Grid { line: Some(l), message } => {
            CliError::Config(format!("{}:{l}: {message}", path.display()))
        }
        e => CliError::Config(format!("{}: {e}", path.display())),
    })
}

/// Runs the grid with its store and artifacts under the output directory. Failed cells are
/// listed in `index.json` and `summary.json`; the rest of the artifacts are still written.
pub fn sweep(args: &SweepArgs) -> Result<SweepOutcome, CliError> {
    let grid = load_grid(args.grid.as_deref())?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let options = SweepOptions {
        workers: args.workers,
        resume: args.resume,
        replay_thresholds: args.replay_thresholds,
        store: Some(out.clone()),
    };
    let quiet = args.quiet;
    let outcome = run_sweep(&grid, &options, |p| {
        if !quiet {
            eprintln!("[{}/{}] {}{}", p.done, p.total, p.key, if p.reused { " (stored)" } else { "" });
        }
    })?;
    write_artifacts(&grid, &outcome, &out)?;
    if outcome.failed.is_empty() {
        Ok(outcome)
    } else {
        for f in &outcome.failed {
            eprintln!("{}: {}", f.key, f.error);
        }
        Err(CliError::CellsFailed {
            failed: outcome.failed.len(),
            total: grid.cells().len(),
        })
    }
}
