//! Detection and isolation rates over a set of records.
//!
//! TPR is correct isolations over faulty flights and FPR is isolations of any rotor over
//! fault-free flights, both per damping and threshold; TPR is also split by chip depth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::runner::ExperimentRecord;

/// Exact comparison key for a float factor.
fn bits(x: f64) -> u64 {
    x.to_bits()
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: Option<f64>,
    pub tpr: Option<f64>,
    pub faulty: usize,
    pub fault_free: usize,
}

/// TPR against FPR over the thresholds, for one chip depth and damping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub damping: f64,
    pub depth: f64,
    pub points: Vec<RocPoint>,
}

/// Rows are the true faulty rotor with a last row for fault-free flights; columns are the
/// isolated rotor with a last column for no verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub damping: f64,
    pub threshold: f64,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn rotors(&self) -> usize {
        self.counts.len() - 1
    }

    /// Faulty flights isolated to a rotor other than the faulty one.
    pub fn rotor_confusions(&self) -> usize {
        let n = self.rotors();
        (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| self.counts[i][j]).sum::<usize>()).sum()
    }

    /// Faulty flights without a verdict.
    pub fn missed(&self) -> usize {
        let n = self.rotors();
        (0..n).map(|i| self.counts[i][n]).sum()
    }

    /// Fault-free flights isolated to some rotor.
    pub fn false_alarms(&self) -> usize {
        let n = self.rotors();
        self.counts[n][..n].iter().sum()
    }
}

/// Correct-isolation ratio over faulty flights of one depth and damping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub damping: f64,
    pub depth: f64,
    pub correct_ratio: Option<f64>,
    pub flights: usize,
}

/// Faulty flights without a verdict, per damping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissRate {
    pub damping: f64,
    pub rate: Option<f64>,
    pub flights: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub report_threshold: f64,
    pub records: usize,
    pub roc: Vec<RocCurve>,
    pub confusion: Vec<ConfusionMatrix>,
    pub accuracy: Vec<AccuracyCell>,
    pub false_negative: Vec<MissRate>,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    faulty: usize,
    correct: usize,
    fault_free: usize,
    false_alarms: usize,
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// ROC curves per damping and non-zero depth, one point per threshold.
pub fn roc_points(records: &[ExperimentRecord], thresholds: &[f64]) -> Vec<RocCurve> {
    let mut faulty: BTreeMap<(u64, u64, u64), Tally> = BTreeMap::new();
    let mut free: BTreeMap<(u64, u64), Tally> = BTreeMap::new();
    for r in records {
        if r.fault_injected {
            let t = faulty.entry((bits(r.damping), bits(r.depth), bits(r.threshold))).or_default();
            t.faulty += 1;
            t.correct += r.correct() as usize;
        } else {
            let t = free.entry((bits(r.damping), bits(r.threshold))).or_default();
            t.fault_free += 1;
            t.false_alarms += r.false_alarm() as usize;
        }
    }
    let dampings = sorted_unique(records.iter().map(|r| r.damping).collect());
    let depths = sorted_unique(records.iter().filter(|r| r.fault_injected).map(|r| r.depth).collect());
    let thresholds = sorted_unique(thresholds.to_vec());
    let mut curves = Vec::new();
    for &d in &dampings {
        for &depth in &depths {
            let points = thresholds
                .iter()
                .map(|&rho| {
                    let f = faulty.get(&(bits(d), bits(depth), bits(rho))).copied().unwrap_or_default();
                    let h = free.get(&(bits(d), bits(rho))).copied().unwrap_or_default();
                    RocPoint {
                        threshold: rho,
                        fpr: ratio(h.false_alarms, h.fault_free),
                        tpr: ratio(f.correct, f.faulty),
                        faulty: f.faulty,
                        fault_free: h.fault_free,
                    }
                })
                .collect();
            curves.push(RocCurve { damping: d, depth, points });
        }
    }
    curves
}

/// Confusion matrix at one threshold, per damping.
pub fn confusion_matrices(records: &[ExperimentRecord], rotors: usize, threshold: f64) -> Vec<ConfusionMatrix> {
    let dampings = sorted_unique(records.iter().map(|r| r.damping).collect());
    dampings
        .into_iter()
        .map(|d| {
            let mut counts = vec![vec![0; rotors + 1]; rotors + 1];
            for r in records
                .iter()
                .filter(|r| bits(r.damping) == bits(d) && bits(r.threshold) == bits(threshold))
            {
                let row = if r.fault_injected { r.rotor - 1 } else { rotors };
                counts[row][r.verdict.map_or(rotors, |v| v - 1)] += 1;
            }
            ConfusionMatrix {
                damping: d,
                threshold,
                counts,
            }
        })
        .collect()
}

pub fn accuracy_table(records: &[ExperimentRecord], threshold: f64) -> Vec<AccuracyCell> {
    let mut t: BTreeMap<(u64, u64), Tally> = BTreeMap::new();
    let at: Vec<&ExperimentRecord> = records
        .iter()
        .filter(|r| r.fault_injected && bits(r.threshold) == bits(threshold))
        .collect();
    for r in &at {
        let e = t.entry((bits(r.damping), bits(r.depth))).or_default();
        e.faulty += 1;
        e.correct += r.correct() as usize;
    }
    let mut out: Vec<AccuracyCell> = t
        .into_iter()
        .map(|((d, depth), e)| AccuracyCell {
            damping: f64::from_bits(d),
            depth: f64::from_bits(depth),
            correct_ratio: ratio(e.correct, e.faulty),
            flights: e.faulty,
        })
        .collect();
    out.sort_by(|a, b| a.damping.total_cmp(&b.damping).then(a.depth.total_cmp(&b.depth)));
    out
}

pub fn miss_rates(records: &[ExperimentRecord], threshold: f64) -> Vec<MissRate> {
    let dampings = sorted_unique(records.iter().map(|r| r.damping).collect());
    dampings
        .into_iter()
        .map(|d| {
            let flights: Vec<_> = records
                .iter()
                .filter(|r| r.fault_injected && bits(r.damping) == bits(d) && bits(r.threshold) == bits(threshold))
                .collect();
            let missed = flights.iter().filter(|r| r.verdict.is_none()).count();
            MissRate {
                damping: d,
                rate: ratio(missed, flights.len()),
                flights: flights.len(),
            }
        })
        .collect()
}

/// Full report. `records` may come in any order; the result does not depend on it.
pub fn report(records: &[ExperimentRecord], thresholds: &[f64], rotors: usize, report_threshold: f64) -> MetricsReport {
    MetricsReport {
        report_threshold,
        records: records.len(),
        roc: roc_points(records, thresholds),
        confusion: confusion_matrices(records, rotors, report_threshold),
        accuracy: accuracy_table(records, report_threshold),
        false_negative: miss_rates(records, report_threshold),
    }
}
