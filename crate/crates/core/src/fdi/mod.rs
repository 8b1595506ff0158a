//! Spectral residuals, threshold detection and the active isolation state machine.

mod goertzel;
mod isolation;
mod residual;
mod spectral;

pub use goertzel::{dense_dft, goertzel, goertzel_magnitude};
pub use isolation::{decide_verdict, FdiConfig, FdiEngine, IsolationState, Phase, Residuals};
pub use residual::{PulsationGrid, ResidualWindow};
pub use spectral::{modulation_spectrum, spectral_predictor_fas, unbalance_carriers};
