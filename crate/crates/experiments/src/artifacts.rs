//! CSV and JSON files written at the end of a sweep.
//!
//! Every file is a pure function of the successful cells, so a resumed sweep writes the
//! same bytes as an uninterrupted one.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};
use crate::grid::SweepGrid;
use crate::metrics::MetricsReport;
use crate::sweep::{FailedCell, SweepOutcome};

pub const SCHEMA_VERSION: u32 = 1;

pub const RECORDS_HEADER: &str = "key,trajectory,depth,damping,rotor,replicate,seed,threshold,fault_injected,detected,detected_at,isolated_at,verdict,diverged";
pub const ROC_HEADER: &str = "depth,threshold,fpr,tpr,faulty_flights,fault_free_flights";
pub const ACCURACY_HEADER: &str = "damping,depth,correct_ratio,flights";

pub fn confusion_header(rotors: usize) -> String {
    let mut s = String::from("true_rotor");
    for j in 1..=rotors {
        let _ = write!(s, ",verdict_{j}");
    }
    s + ",no_verdict"
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub cells: usize,
    pub evaluations: usize,
    pub cycles: usize,
    pub failed: Vec<FailedCell>,
    pub report: MetricsReport,
}

/// `0.05` becomes `5`, `0.025` becomes `2.5`.
pub fn damping_tag(d: f64) -> String {
    let pct = (d * 100.0 * 1e6).round() / 1e6;
    format!("{pct}")
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write(path: PathBuf, text: String, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(ExperimentError::io(&path))?;
    written.push(path);
    Ok(())
}

/// Writes `records.csv`, `roc_d<pct>.csv`, `confusion_d<pct>.csv`, `accuracy.csv` and
/// `summary.json` into `out`. Returns the paths written.
pub fn write_artifacts(grid: &SweepGrid, outcome: &SweepOutcome, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(ExperimentError::io(out))?;
    let mut written = Vec::new();
    let report = &outcome.report;

    let mut s = format!("{RECORDS_HEADER}\n");
    for r in outcome.records() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.key,
            r.trajectory,
            r.depth,
            r.damping,
            r.rotor,
            r.replicate,
            r.seed,
            r.threshold,
            r.fault_injected,
            r.detected,
            opt(r.detected_at),
            opt(r.isolated_at),
            r.verdict.map(|v| v.to_string()).unwrap_or_default(),
            r.diverged
        );
    }
    write(out.join("records.csv"), s, &mut written)?;

    let mut dampings: Vec<f64> = report.roc.iter().map(|c| c.damping).collect();
    dampings.dedup();
    for d in dampings {
        let mut s = format!("{ROC_HEADER}\n");
        for c in report.roc.iter().filter(|c| c.damping == d) {
            for p in &c.points {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    c.depth,
                    p.threshold,
                    opt(p.fpr),
                    opt(p.tpr),
                    p.faulty,
                    p.fault_free
                );
            }
        }
        write(out.join(format!("roc_d{}.csv", damping_tag(d))), s, &mut written)?;
    }

    for m in &report.confusion {
        let n = m.rotors();
        let mut s = confusion_header(n) + "\n";
        for (i, row) in m.counts.iter().enumerate() {
            if i < n {
                let _ = write!(s, "{}", i + 1);
            } else {
                s.push_str("none");
            }
            for c in row {
                let _ = write!(s, ",{c}");
            }
            s.push('\n');
        }
        write(out.join(format!("confusion_d{}.csv", damping_tag(m.damping))), s, &mut written)?;
    }

    let mut s = format!("{ACCURACY_HEADER}\n");
    for a in &report.accuracy {
        let _ = writeln!(s, "{},{},{},{}", a.damping, a.depth, opt(a.correct_ratio), a.flights);
    }
    write(out.join("accuracy.csv"), s, &mut written)?;

    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        cells: grid.cells().len(),
        evaluations: grid.cardinality(),
        cycles: outcome.cycles(),
        failed: outcome.failed.clone(),
        report: report.clone(),
    };
    let path = out.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|source| ExperimentError::Json {
        path: path.clone(),
        source,
    })?;
    write(path, text + "\n", &mut written)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::damping_tag;

    #[test]
    fn damping_tags() {
        assert_eq!(damping_tag(0.05), "5");
        assert_eq!(damping_tag(0.03), "3");
        assert_eq!(damping_tag(0.01), "1");
        assert_eq!(damping_tag(0.025), "2.5");
    }
}
