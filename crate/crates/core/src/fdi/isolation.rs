use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::residual::{PulsationGrid, ResidualWindow};
use crate::allocation::PinDirective;
use crate::error::{Error, Result};

/// Residual bands, threshold and stage timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdiConfig {
    /// Detection band (rad/s).
    pub detection_band: PulsationGrid,
    /// Isolation band (rad/s); must not overlap the detection band.
    pub isolation_band: PulsationGrid,
    /// Residual window length (s).
    pub window: f64,
    /// Detection threshold, in units of the scaled residual.
    pub threshold: f64,
    /// Multiplies the `2|X|/N` amplitude (m/s^2) before thresholding; `1/g` expresses residuals in g.
    pub residual_scale: f64,
    /// Rotor speed imposed on the pinned motor (rad/s).
    pub pinned_speed: f64,
    /// Length of each isolation stage (s).
    pub stage_duration: f64,
    /// Part of each stage ignored when taking the peak (s).
    pub settle_time: f64,
    /// The winning stage must exceed the runner-up by this factor.
    pub prominence: f64,
    /// Stop stepping through motors once the leader beats every other finished stage by this
    /// factor (after at least two stages). `None`, written `"off"` in TOML, always runs every
    /// stage.
    #[serde(with = "factor_or_off")]
    pub early_exit: Option<f64>,
}

mod factor_or_off {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Factor(f64),
        Word(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(f) => Repr::Factor(*f),
            None => Repr::Word("off".into()),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Factor(f) => Ok(Some(f)),
            Repr::Word(w) if w == "off" => Ok(None),
            Repr::Word(w) => Err(serde::de::Error::custom(format!("early_exit: expected a factor or \"off\", got {w:?}"))),
        }
    }
}

impl Default for FdiConfig {
    fn default() -> Self {
        Self {
            detection_band: PulsationGrid::new(490.0, 620.0, 5.0),
            isolation_band: PulsationGrid::new(435.0, 480.0, 5.0),
            window: 1.0,
            threshold: 0.005,
            residual_scale: 1.0 / 9.81,
            pinned_speed: 430.0,
            stage_duration: 5.0,
            settle_time: 1.5,
            prominence: 2.0,
            early_exit: Some(4.0),
        }
    }
}

impl FdiConfig {
    pub fn validate(&self, sample_rate: f64, max_speed: f64) -> Result<()> {
        self.detection_band.validate(sample_rate)?;
        self.isolation_band.validate(sample_rate)?;
        if self.detection_band.overlaps(&self.isolation_band) {
            return Err(Error::InvalidParams("detection and isolation bands overlap".into()));
        }
        if !(self.window > 0.0 && self.window * sample_rate >= 1.0) {
            return Err(Error::InvalidParams("residual window must hold at least one sample".into()));
        }
        if !(self.threshold >= 0.0) || !(self.residual_scale > 0.0) {
            return Err(Error::InvalidParams("threshold must be >= 0 and residual scale > 0".into()));
        }
        if !(self.pinned_speed > 0.0 && self.pinned_speed <= max_speed) {
            return Err(Error::InvalidParams(format!(
                "pinned speed {} outside (0, {max_speed}]",
                self.pinned_speed
            )));
        }
        if !(self.stage_duration > 0.0 && self.settle_time >= 0.0 && self.settle_time < self.stage_duration) {
            return Err(Error::InvalidParams("settle time must be shorter than a stage".into()));
        }
        if !(self.prominence >= 1.0) || self.early_exit.is_some_and(|f| !(f >= 1.0)) {
            return Err(Error::InvalidParams("prominence factors must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", content = "motor", rename_all = "snake_case")]
pub enum Phase {
    Monitoring,
    /// Motor under test, zero-based.
    Stage(usize),
    Verdict,
}

/// Progress of detection and isolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationState {
    pub phase: Phase,
    /// Peak isolation residual of every finished stage.
    pub stage_peaks: Vec<Option<f64>>,
    pub detected_at: Option<f64>,
    pub isolated_at: Option<f64>,
    /// Faulty motor, zero-based, when the verdict is conclusive.
    pub verdict: Option<usize>,
}

impl IsolationState {
    fn new(rotors: usize) -> Self {
        Self {
            phase: Phase::Monitoring,
            stage_peaks: vec![None; rotors],
            detected_at: None,
            isolated_at: None,
            verdict: None,
        }
    }
}

/// Argmax over stage peaks, kept only if it beats the runner-up by `prominence` and reaches
/// `threshold`.
pub fn decide_verdict(peaks: &[Option<f64>], prominence: f64, threshold: f64) -> Option<usize> {
    let (mut best, mut second) = (None::<(usize, f64)>, f64::NEG_INFINITY);
    for (i, p) in peaks.iter().enumerate() {
        let Some(p) = *p else { continue };
        match best {
            Some((_, b)) if p <= b => second = second.max(p),
            _ => {
                if let Some((_, b)) = best {
                    second = second.max(b);
                }
                best = Some((i, p));
            }
        }
    }
    let (i, p) = best?;
    (p >= threshold && p >= prominence * second.max(0.0) && (second < 0.0 || p > second)).then_some(i)
}

/// Residuals computed at one control cycle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub detection: Option<f64>,
    pub isolation: Option<f64>,
}

/// Detection and active isolation state machine, one step per control cycle.
///
/// `observe` feeds a measurement and evaluates the residuals; `decide` advances the phase
/// and returns the pin directive for the allocator. The two are separate so a caller can
/// copy the engine between them and continue with another threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct FdiEngine {
    config: FdiConfig,
    rotors: usize,
    pinned_lift: f64,
    window: ResidualWindow<f64>,
    detection_grid: Vec<f64>,
    isolation_grid: Vec<f64>,
    stage_cycles: usize,
    settle_cycles: usize,
    cycle_in_stage: usize,
    running_peak: Option<f64>,
    residuals: Residuals,
    state: IsolationState,
}

impl FdiEngine {
    pub fn new(config: FdiConfig, rotors: usize, sample_rate: f64, lift_coeff: f64, max_speed: f64) -> Result<Self> {
        config.validate(sample_rate, max_speed)?;
        let dt = 1.0 / sample_rate;
        Ok(Self {
            pinned_lift: lift_coeff * config.pinned_speed * config.pinned_speed,
            window: ResidualWindow::new(config.window, sample_rate),
            detection_grid: config.detection_band.pulsations(),
            isolation_grid: config.isolation_band.pulsations(),
            stage_cycles: (config.stage_duration / dt).round() as usize,
            settle_cycles: (config.settle_time / dt).round() as usize,
            cycle_in_stage: 0,
            running_peak: None,
            residuals: Residuals::default(),
            state: IsolationState::new(rotors),
            rotors,
            config,
        })
    }

    pub fn config(&self) -> &FdiConfig {
        &self.config
    }

    pub fn state(&self) -> &IsolationState {
        &self.state
    }

    pub fn residuals(&self) -> Residuals {
        self.residuals
    }

    pub fn pinned_lift(&self) -> f64 {
        self.pinned_lift
    }

    /// Changes the detection threshold. Only meaningful before detection.
    pub fn set_threshold(&mut self, threshold: f64) {
        self.config.threshold = threshold;
    }

    /// Returns `true` if `decide` would report a detection at this cycle.
    pub fn would_detect(&self) -> bool {
        self.state.phase == Phase::Monitoring
            && self
                .residuals
                .detection
                .is_some_and(|r| r >= self.config.threshold)
    }

    /// Appends a measured body acceleration and evaluates both residuals once the window is
    /// full. The detection residual is not evaluated outside monitoring.
    pub fn observe(&mut self, accel: &Vector3<f64>) {
        self.window.push(accel);
        let scale = self.config.residual_scale;
        let full = self.window.is_full();
        self.residuals = Residuals {
            detection: (full && self.state.phase == Phase::Monitoring)
                .then(|| self.window.peak(&self.detection_grid).ok().map(|r| r * scale))
                .flatten(),
            isolation: full
                .then(|| self.window.peak(&self.isolation_grid).ok().map(|r| r * scale))
                .flatten(),
        };
    }

    /// Advances the phase at time `t` and returns the pin for the coming cycle.
    pub fn decide(&mut self, t: f64) -> Option<PinDirective<f64>> {
        match self.state.phase {
            Phase::Monitoring => {
                if self.would_detect() {
                    self.state.detected_at = Some(t);
                    self.start_stage(0);
                }
            }
            Phase::Stage(j) => {
                self.cycle_in_stage += 1;
                if self.cycle_in_stage > self.settle_cycles {
                    if let Some(r) = self.residuals.isolation {
                        self.running_peak = Some(self.running_peak.map_or(r, |p| p.max(r)));
                    }
                }
                if self.cycle_in_stage >= self.stage_cycles {
                    self.state.stage_peaks[j] = Some(self.running_peak.unwrap_or(0.0));
                    if j + 1 == self.rotors || self.leader_is_clear(j + 1) {
                        self.state.phase = Phase::Verdict;
                        self.state.isolated_at = Some(t);
                        self.state.verdict =
                            decide_verdict(&self.state.stage_peaks, self.config.prominence, self.config.threshold);
                    } else {
                        self.start_stage(j + 1);
                    }
                }
            }
            Phase::Verdict => {}
        }
        self.pin()
    }

    fn start_stage(&mut self, j: usize) {
        self.state.phase = Phase::Stage(j);
        self.cycle_in_stage = 0;
        self.running_peak = None;
    }

    fn leader_is_clear(&self, finished: usize) -> bool {
        let Some(factor) = self.config.early_exit else {
            return false;
        };
        if finished < 2 {
            return false;
        }
        decide_verdict(&self.state.stage_peaks, factor, 0.0).is_some()
    }

    /// Pin directive for the current phase.
    pub fn pin(&self) -> Option<PinDirective<f64>> {
        match self.state.phase {
            Phase::Stage(j) => Some(PinDirective {
                motor: j,
                lift: self.pinned_lift,
            }),
            _ => None,
        }
    }

    /// Forgets the verdict and returns to monitoring with an empty window.
    pub fn reset(&mut self) {
        self.state = IsolationState::new(self.rotors);
        self.window.clear();
        self.residuals = Residuals::default();
        self.cycle_in_stage = 0;
        self.running_peak = None;
    }

    pub fn window_mut(&mut self) -> &mut ResidualWindow<f64> {
        &mut self.window
    }
}
