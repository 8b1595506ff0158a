//! Factor grid of a sweep and the flights it expands to.

use bladefdi::config::{FaultSpec, RunConfig};
use bladefdi::control::Trajectory;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ExperimentError, Result};

/// Default thresholds: 20 values from 0.0005 to 0.01.
pub fn default_thresholds() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 2000.0).collect()
}

/// Factors of a sweep. One flight is simulated per combination of trajectory, depth, damping,
/// rotor and replicate; every threshold is evaluated on that flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGrid {
    /// Trajectory family names: `line`, `helicoid`, `figure8`, `square` or `hover`.
    pub trajectories: Vec<String>,
    /// Chip depths as fractions of the blade radius; `0` is a fault-free flight.
    pub chip_depths: Vec<f64>,
    /// Vibration damping factors `d`.
    pub dampings: Vec<f64>,
    /// Detection thresholds, in residual units.
    pub thresholds: Vec<f64>,
    /// One-based rotor indices; empty means every rotor of the vehicle.
    pub rotors: Vec<usize>,
    /// Replicates per cell.
    pub replicates: u32,
    /// Mixed into every cell seed.
    pub base_seed: u64,
    /// Flight duration (s); `None` covers onset plus one stage per rotor plus 5 s.
    pub duration: Option<f64>,
    /// Threshold at which confusion matrices, accuracy and miss rates are reported.
    pub report_threshold: f64,
    /// Configuration shared by every flight.
    pub base: RunConfig,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            trajectories: ["line", "helicoid", "figure8", "square"].map(String::from).to_vec(),
            chip_depths: vec![0.0, 0.05, 0.1, 0.15, 0.2],
            dampings: vec![0.05, 0.03, 0.01],
            thresholds: default_thresholds(),
            rotors: Vec::new(),
            replicates: 1,
            base_seed: 1,
            duration: None,
            report_threshold: 0.008,
            base: RunConfig::default(),
        }
    }
}

/// Coordinates of one simulated flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub trajectory: String,
    pub depth: f64,
    pub damping: f64,
    /// One-based.
    pub rotor: usize,
    pub replicate: u32,
}

impl Cell {
    /// Stable key, used for file names, seeds and the sorted fold.
    pub fn key(&self) -> String {
        format!(
            "{}_depth{:.4}_damping{:.4}_rotor{}_rep{}",
            self.trajectory, self.depth, self.damping, self.rotor, self.replicate
        )
    }
}

pub fn trajectory_by_name(name: &str) -> Option<Trajectory> {
    Some(match name {
        "line" => Trajectory::line(),
        "helicoid" => Trajectory::helicoid(),
        "figure8" => Trajectory::figure8(),
        "square" => Trajectory::square(),
        "hover" => Trajectory::hover(),
        _ => return None,
    })
}

impl SweepGrid {
    /// Parses a grid file. Errors carry the line of the offending entry.
    pub fn from_toml(text: &str) -> Result<Self> {
        let grid: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            ExperimentError::Grid {
                line,
                message: e.message().to_string(),
            }
        })?;
        grid.validate().map_err(|e| match e {
            ExperimentError::Grid { line: None, message } => {
                let key = message.split(':').next().unwrap_or("");
                ExperimentError::Grid {
                    line: find_key_line(text, key),
                    message,
                }
            }
            e => e,
        })?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, what: String| {
            Err(ExperimentError::Grid {
                line: None,
                message: format!("{key}: {what}"),
            })
        };
        for t in &self.trajectories {
            if trajectory_by_name(t).is_none() {
                return bad("trajectories", format!("unknown trajectory {t:?}"));
            }
        }
        if let Some(d) = self.chip_depths.iter().find(|d| !(0.0..1.0).contains(*d)) {
            return bad("chip_depths", format!("{d} outside [0, 1)"));
        }
        if let Some(d) = self.dampings.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return bad("dampings", format!("{d} outside (0, 1]"));
        }
        if let Some(r) = self.thresholds.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return bad("thresholds", format!("{r} is not a finite non-negative value"));
        }
        let n = self.base.vehicle.rotor_count();
        if let Some(r) = self.rotors.iter().find(|r| **r == 0 || **r > n) {
            return bad("rotors", format!("{r} outside 1..={n}"));
        }
        if let Some(d) = self.duration {
            if !(d >= 0.0 && d.is_finite()) {
                return bad("duration", format!("{d} is not a finite non-negative time"));
            }
        }
        if !self.thresholds.is_empty() && !self.thresholds.contains(&self.report_threshold) {
            return bad("report_threshold", format!("{} is not one of the thresholds", self.report_threshold));
        }
        self.base
            .validate()
            .map_err(|e| ExperimentError::Grid {
                line: None,
                message: format!("base: {e}"),
            })
    }

    pub fn rotor_list(&self) -> Vec<usize> {
        if self.rotors.is_empty() {
            (1..=self.base.vehicle.rotor_count()).collect()
        } else {
            self.rotors.clone()
        }
    }

    /// Every flight of the grid, in key order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for trajectory in &self.trajectories {
            for &depth in &self.chip_depths {
                for &damping in &self.dampings {
                    for rotor in self.rotor_list() {
                        for replicate in 0..self.replicates {
                            cells.push(Cell {
                                trajectory: trajectory.clone(),
                                depth,
                                damping,
                                rotor,
                                replicate,
                            });
                        }
                    }
                }
            }
        }
        cells.sort_by_key(|c| c.key());
        cells
    }

    /// Number of (flight, threshold) evaluations.
    pub fn cardinality(&self) -> usize {
        self.trajectories.len()
            * self.chip_depths.len()
            * self.dampings.len()
            * self.thresholds.len()
            * self.rotor_list().len()
            * self.replicates as usize
    }

    /// Thresholds in ascending order without duplicates.
    pub fn sorted_thresholds(&self) -> Vec<f64> {
        let mut t = self.thresholds.clone();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }

    pub fn cell_seed(&self, cell: &Cell) -> u64 {
        let digest = Sha256::digest(format!("{}/{}", self.base_seed, cell.key()).as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }

    fn flight_duration(&self) -> f64 {
        self.duration.unwrap_or_else(|| {
            let fdi = &self.base.fdi;
            self.base.fault.onset + fdi.stage_duration * self.base.vehicle.rotor_count() as f64 + 5.0
        })
    }

    /// Run configuration of a cell. The detection threshold is left at the base value; the
    /// runner sets it per evaluation.
    pub fn config_for(&self, cell: &Cell) -> Result<RunConfig> {
        let mut cfg = self.base.clone();
        cfg.trajectory = trajectory_by_name(&cell.trajectory).ok_or_else(|| ExperimentError::Grid {
            line: None,
            message: format!("unknown trajectory {:?}", cell.trajectory),
        })?;
        cfg.fault = FaultSpec {
            rotor: cell.rotor,
            depth: cell.depth,
            onset: self.base.fault.onset,
        };
        cfg.imu.damping = cell.damping;
        cfg.seed = self.cell_seed(cell);
        cfg.duration = self.flight_duration();
        Ok(cfg)
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn find_key_line(text: &str, key: &str) -> Option<usize> {
    if key.is_empty() {
        return None;
    }
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
            || (key == "base" && l.starts_with("[base"))
    })
    .map(|i| i + 1)
}
