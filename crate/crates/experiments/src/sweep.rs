//! Parallel sweep over a grid.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};
use crate::grid::{Cell, SweepGrid};
use crate::metrics::{report, MetricsReport};
use crate::runner::{run_cell, run_cell_fresh, CellResult, ExperimentRecord};
use crate::store::{CellStore, IndexEntry};

#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Worker threads; 0 lets rayon choose.
    pub workers: usize,
    /// Reuse stored cells whose configuration and thresholds match.
    pub resume: bool,
    /// Evaluate every threshold from one monitoring flight instead of one flight each.
    pub replay_thresholds: bool,
    /// Directory of the cell store; `None` keeps everything in memory.
    pub store: Option<PathBuf>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            resume: false,
            replay_thresholds: true,
            store: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Progress<'a> {
    pub done: usize,
    pub total: usize,
    pub key: &'a str,
    pub reused: bool,
}

/// A cell that could not be simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub key: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Successful cells in key order.
    pub cells: Vec<CellResult>,
    pub failed: Vec<FailedCell>,
    pub reused: usize,
    pub report: MetricsReport,
}

impl SweepOutcome {
    pub fn records(&self) -> impl Iterator<Item = &ExperimentRecord> {
        self.cells.iter().flat_map(|c| c.records.iter())
    }

    pub fn cycles(&self) -> usize {
        self.cells.iter().map(|c| c.cycles).sum()
    }
}

fn matches(stored: &CellResult, cell: &Cell, grid: &SweepGrid, thresholds: &[f64]) -> bool {
    stored.cell == *cell
        && grid.config_for(cell).is_ok_and(|c| c == stored.config)
        && stored.records.len() == thresholds.len()
        && stored.records.iter().zip(thresholds).all(|(r, t)| r.threshold.to_bits() == t.to_bits())
}

/// Runs every cell of `grid`. Cell failures are collected, not propagated; only setup errors
/// (pool, store directory) abort the sweep. The outcome does not depend on the worker count.
pub fn run_sweep(
    grid: &SweepGrid,
    options: &SweepOptions,
    progress: impl Fn(&Progress) + Sync,
) -> Result<SweepOutcome> {
    grid.validate()?;
    let thresholds = grid.sorted_thresholds();
    let cells = grid.cells();
    let store = options.store.as_deref().map(CellStore::open).transpose()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let done = AtomicUsize::new(0);

    let results: Vec<(Result<CellResult>, bool)> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let key = cell.key();
                let stored = match (&store, options.resume) {
                    (Some(s), true) => s.load(&key).filter(|r| matches(r, cell, grid, &thresholds)),
                    _ => None,
                };
                let reused = stored.is_some();
                let result = match stored {
                    Some(r) => Ok(r),
                    None => grid.config_for(cell).and_then(|cfg| {
                        let r = if options.replay_thresholds {
                            run_cell(cell, &cfg, &thresholds)
                        } else {
                            run_cell_fresh(cell, &cfg, &thresholds)
                        }?;
                        if let Some(s) = &store {
                            s.save(&r)?;
                        }
                        Ok(r)
                    }),
                };
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                progress(&Progress {
                    done: n,
                    total: cells.len(),
                    key: &key,
                    reused,
                });
                (result, reused)
            })
            .collect()
    });

    let mut ok = Vec::new();
    let mut failed = Vec::new();
    let mut index = Vec::with_capacity(cells.len());
    let mut reused = 0;
    for (cell, (result, was_reused)) in cells.iter().zip(results) {
        reused += was_reused as usize;
        let key = cell.key();
        match result {
            Ok(r) => {
                index.push(IndexEntry {
                    file: Some(format!("cells/{key}.json")),
                    key,
                    error: None,
                });
                ok.push(r)
            }
            Err(e) => {
                index.push(IndexEntry {
                    key: key.clone(),
                    file: None,
                    error: Some(e.to_string()),
                });
                failed.push(FailedCell { key, error: e.to_string() })
            }
        }
    }
    if let Some(s) = &store {
        s.write_index(&index)?;
    }
    let records: Vec<ExperimentRecord> = ok.iter().flat_map(|c| c.records.iter().cloned()).collect();
    let report = report(
        &records,
        &thresholds,
        grid.base.vehicle.rotor_count(),
        grid.report_threshold,
    );
    Ok(SweepOutcome {
        cells: ok,
        failed,
        reused,
        report,
    })
}
