//! Factorial sweeps of the fault-isolation scheme: grids, single flights with threshold
//! replay, a resumable cell store, ROC and confusion metrics, and the files they produce.

pub mod artifacts;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod runner;
pub mod store;
pub mod sweep;

pub use artifacts::{write_artifacts, Summary, SCHEMA_VERSION};
pub use error::{ExperimentError, Result};
pub use grid::{default_thresholds, Cell, SweepGrid};
pub use metrics::{report, ConfusionMatrix, MetricsReport, RocCurve, RocPoint};
pub use runner::{run_cell, run_cell_fresh, run_one, CellResult, ExperimentRecord};
pub use sweep::{run_sweep, FailedCell, Progress, SweepOptions, SweepOutcome};
