//! Run configuration, read from a single TOML file. Every field has a default; an empty file
//! gives the helicoid demonstration flight with a 10% chip on rotor 2 at 10 s.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::allocation::AllocationConfig;
use crate::control::{Gains, Trajectory};
use crate::disturbance::DisturbanceConfig;
use crate::error::{Error, Result};
use crate::fdi::FdiConfig;
use crate::model::{FaultState, VehicleParams};
use crate::sensing::ImuConfig;

/// Single-blade chip. `rotor` is one-based; `depth = 0` means no fault.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaultSpec {
    pub rotor: usize,
    /// Fraction of the blade radius removed, in `[0, 1)`.
    pub depth: f64,
    /// Onset time (s).
    pub onset: f64,
}

impl Default for FaultSpec {
    fn default() -> Self {
        Self {
            rotor: 2,
            depth: 0.1,
            onset: 10.0,
        }
    }
}

impl FaultSpec {
    pub fn healthy() -> Self {
        Self {
            depth: 0.0,
            ..Self::default()
        }
    }

    pub fn is_fault(&self) -> bool {
        self.depth > 0.0
    }

    pub fn state(&self, params: &VehicleParams<f64>) -> Result<FaultState<f64>> {
        if self.rotor == 0 || self.rotor > params.rotor_count() {
            return Err(Error::InvalidParams(format!(
                "fault rotor {} outside 1..={}",
                self.rotor,
                params.rotor_count()
            )));
        }
        if !(0.0..1.0).contains(&self.depth) || !(self.onset >= 0.0) {
            return Err(Error::InvalidParams("chip depth must lie in [0, 1) and onset be >= 0".into()));
        }
        let fault = FaultState::chipped(params, self.rotor - 1, self.depth, self.onset);
        fault.validate(params)?;
        Ok(fault)
    }
}

/// Everything that defines one simulated flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Flight duration (s).
    pub duration: f64,
    /// Integrator step (s).
    pub physics_dt: f64,
    /// Physics steps per control, sensing and FDI cycle.
    pub control_divider: usize,
    /// Output directory; the command line flag and the environment take precedence.
    pub output: Option<PathBuf>,
    pub vehicle: VehicleParams<f64>,
    pub trajectory: Trajectory,
    pub fault: FaultSpec,
    pub imu: ImuConfig,
    pub gains: Gains,
    pub allocation: AllocationConfig,
    pub fdi: FdiConfig,
    pub disturbance: DisturbanceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            duration: 55.0,
            physics_dt: 1e-3,
            control_divider: 5,
            output: None,
            vehicle: VehicleParams::default(),
            trajectory: Trajectory::helicoid(),
            fault: FaultSpec::default(),
            imu: ImuConfig::default(),
            gains: Gains::default(),
            allocation: AllocationConfig::default(),
            fdi: FdiConfig::default(),
            disturbance: DisturbanceConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidParams(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises")
    }

    /// Control and sampling period (s).
    pub fn control_period(&self) -> f64 {
        self.physics_dt * self.control_divider as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidParams("duration must be finite and >= 0".into()));
        }
        if !(self.physics_dt > 0.0) || self.control_divider == 0 {
            return Err(Error::InvalidParams("physics step and control divider must be positive".into()));
        }
        let fs = 1.0 / self.control_period();
        if (fs - self.imu.sample_rate).abs() > 1e-9 * fs {
            return Err(Error::InvalidParams(format!(
                "IMU rate {} Hz differs from the control rate {fs} Hz",
                self.imu.sample_rate
            )));
        }
        self.vehicle.validate()?;
        self.trajectory.validate()?;
        self.fault.state(&self.vehicle)?;
        self.imu.validate()?;
        self.gains.validate()?;
        self.allocation.validate()?;
        self.fdi.validate(fs, self.vehicle.max_speed)?;
        self.disturbance.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_demo() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.trajectory.name(), "helicoid");
        assert_eq!(cfg.fault.rotor, 2);
    }

    #[test]
    fn round_trips() {
        let mut cfg = RunConfig::default();
        cfg.trajectory = Trajectory::square();
        cfg.fault.depth = 0.2;
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        cfg.fdi.early_exit = None;
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn trajectory_parameters_default_per_family() {
        for t in [Trajectory::line(), Trajectory::helicoid(), Trajectory::figure8(), Trajectory::square()] {
            let text = format!("[trajectory]\nkind = \"{}\"", t.name());
            assert_eq!(RunConfig::from_toml(&text).unwrap().trajectory, t);
        }
        let cfg = RunConfig::from_toml("[trajectory]\nkind = \"helicoid\"\nradius = 3.0").unwrap();
        assert!(matches!(cfg.trajectory.kind, crate::control::TrajectoryKind::Helicoid { radius, pulsation, .. } if radius == 3.0 && pulsation == 0.3));
    }

    #[test]
    fn early_exit_takes_a_factor_or_off() {
        assert_eq!(RunConfig::from_toml("[fdi]\nearly_exit = \"off\"").unwrap().fdi.early_exit, None);
        assert_eq!(RunConfig::from_toml("[fdi]\nearly_exit = 3").unwrap().fdi.early_exit, Some(3.0));
        assert!(RunConfig::from_toml("[fdi]\nearly_exit = \"never\"").is_err());
        assert!(RunConfig::from_toml("[fdi]\nearly_exit = 0.5").is_err());
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let cfg = RunConfig::from_toml("seed = 7\n[fdi]\nthreshold = 0.008\n[trajectory]\nkind = \"line\"\ndirection = [1.0, 0.0, 0.0]\nspeed = 1.0\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.fdi.threshold, 0.008);
        assert_eq!(cfg.fdi.window, 1.0);
        assert_eq!(cfg.trajectory.name(), "line");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("sed = 7").is_err());
        assert!(RunConfig::from_toml("[fdi]\nthreshhold = 0.1").is_err());
        assert!(RunConfig::from_toml("[trajectory]\nkind = \"hover\"\nradius = 2.0").is_err());
        assert!(RunConfig::from_toml("[vehicle]\nmasss = 2.0").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::from_toml("[fault]\nrotor = 9").is_err());
        assert!(RunConfig::from_toml("duration = -1.0").is_err());
        assert!(RunConfig::from_toml("control_divider = 4").is_err());
    }
}
