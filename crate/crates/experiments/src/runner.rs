//! Single flights and threshold replay over one flight.

use std::time::Instant;

use bladefdi::config::RunConfig;
use bladefdi::fdi::{decide_verdict, IsolationState, Phase};
use bladefdi::sim::Simulation;
use bladefdi::Error;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::Cell;

/// Outcome of one flight evaluated at one detection threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub key: String,
    pub trajectory: String,
    pub depth: f64,
    pub damping: f64,
    /// One-based rotor the fault was injected on (the grid rotor for fault-free flights).
    pub rotor: usize,
    pub replicate: u32,
    pub seed: u64,
    pub threshold: f64,
    pub fault_injected: bool,
    pub detected: bool,
    pub detected_at: Option<f64>,
    pub isolated_at: Option<f64>,
    /// One-based isolated rotor, only when detected and conclusive.
    pub verdict: Option<usize>,
    pub stage_peaks: Vec<Option<f64>>,
    pub diverged: bool,
}

impl ExperimentRecord {
    pub fn correct(&self) -> bool {
        self.fault_injected && self.verdict == Some(self.rotor)
    }

    pub fn false_alarm(&self) -> bool {
        !self.fault_injected && self.verdict.is_some()
    }
}

/// Every threshold of one flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    /// Configuration of the flight; `fdi.threshold` is replaced per record.
    pub config: RunConfig,
    pub records: Vec<ExperimentRecord>,
    /// Control cycles simulated for the cell, forks included.
    pub cycles: usize,
    pub wall_time_s: f64,
}

/// How a flight ended.
struct Ending {
    state: IsolationState,
    diverged: bool,
    cycles: usize,
}

fn record(cell: &Cell, config: &RunConfig, threshold: f64, end: &Ending, verdict: Option<usize>) -> ExperimentRecord {
    let detected = end.state.detected_at.is_some();
    ExperimentRecord {
        key: cell.key(),
        trajectory: cell.trajectory.clone(),
        depth: cell.depth,
        damping: cell.damping,
        rotor: cell.rotor,
        replicate: cell.replicate,
        seed: config.seed,
        threshold,
        fault_injected: config.fault.is_fault(),
        detected,
        detected_at: end.state.detected_at,
        isolated_at: end.state.isolated_at,
        verdict: if detected { verdict.map(|v| v + 1) } else { None },
        stage_peaks: end.state.stage_peaks.clone(),
        diverged: end.diverged,
    }
}

/// Steps until the verdict or the end of the flight. Divergence ends the flight.
fn finish(sim: &mut Simulation) -> Result<Ending> {
    let mut cycles = 0;
    let mut diverged = false;
    while !sim.is_finished() && sim.fdi().state().phase != Phase::Verdict {
        cycles += 1;
        match sim.step_cycle() {
            Ok(_) => {}
            Err(Error::SimDiverged(_)) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Ending {
        state: sim.fdi().state().clone(),
        diverged,
        cycles,
    })
}

/// One flight at the configuration's own threshold.
pub fn run_one(cell: &Cell, config: &RunConfig) -> Result<ExperimentRecord> {
    run_counted(cell, config).map(|(r, _)| r)
}

fn run_counted(cell: &Cell, config: &RunConfig) -> Result<(ExperimentRecord, usize)> {
    let mut sim = Simulation::new(config)?;
    let end = finish(&mut sim)?;
    Ok((record(cell, config, config.fdi.threshold, &end, end.state.verdict), end.cycles))
}

/// Every threshold by a fresh flight each. Reference for [`run_cell`].
pub fn run_cell_fresh(cell: &Cell, config: &RunConfig, thresholds: &[f64]) -> Result<CellResult> {
    let start = Instant::now();
    let mut records = Vec::with_capacity(thresholds.len());
    let mut cycles = 0;
    for &rho in thresholds {
        let mut cfg = config.clone();
        cfg.fdi.threshold = rho;
        let (r, n) = run_counted(cell, &cfg)?;
        records.push(r);
        cycles += n;
    }
    Ok(CellResult {
        cell: cell.clone(),
        config: config.clone(),
        cycles,
        records,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Every threshold from one monitoring flight with detection disabled.
///
/// Before detection the flight does not depend on the threshold, so the monitoring flight is
/// copied at the start of the first cycle whose detection residual reaches a threshold and
/// the copy continues with that threshold. Thresholds reached on the same cycle share the
/// copy: stage scheduling ignores the threshold and only the final verdict depends on it.
/// Each record equals a fresh flight with its threshold.
pub fn run_cell(cell: &Cell, config: &RunConfig, thresholds: &[f64]) -> Result<CellResult> {
    let start = Instant::now();
    let mut order: Vec<usize> = (0..thresholds.len()).collect();
    order.sort_by(|a, b| thresholds[*a].total_cmp(&thresholds[*b]));
    let mut out: Vec<Option<ExperimentRecord>> = vec![None; thresholds.len()];
    let mut next = 0; // thresholds in `order` below `next` have tripped

    let mut monitor_cfg = config.clone();
    monitor_cfg.fdi.threshold = f64::INFINITY;
    let mut monitor = Simulation::new(&monitor_cfg)?;
    let mut cycles = 0;
    let (prominence, mut diverged) = (config.fdi.prominence, false);

    while next < order.len() && !monitor.is_finished() {
        let before = monitor.clone();
        cycles += 1;
        let rec = match monitor.step_cycle() {
            Ok(r) => r,
            Err(Error::SimDiverged(_)) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let Some(r) = rec.residuals.detection else { continue };
        let group_end = (next..order.len()).find(|&k| thresholds[order[k]] > r).unwrap_or(order.len());
        if group_end == next {
            continue;
        }
        let mut fork = before;
        fork.fdi_mut().set_threshold(thresholds[order[next]]);
        let end = finish(&mut fork)?;
        cycles += end.cycles;
        debug_assert_eq!(end.state.detected_at, Some(rec.time));
        for &i in &order[next..group_end] {
            let v = match end.state.phase {
                Phase::Verdict => decide_verdict(&end.state.stage_peaks, prominence, thresholds[i]),
                _ => None,
            };
            out[i] = Some(record(cell, config, thresholds[i], &end, v));
        }
        next = group_end;
    }
    let quiet = Ending {
        state: monitor.fdi().state().clone(),
        diverged,
        cycles: 0,
    };
    for &i in &order[next..] {
        out[i] = Some(record(cell, config, thresholds[i], &quiet, None));
    }
    Ok(CellResult {
        cell: cell.clone(),
        config: config.clone(),
        records: out.into_iter().map(|r| r.expect("every threshold recorded")).collect(),
        cycles,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
