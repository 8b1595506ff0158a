//! IMU model: damping of the vibration share of the acceleration, optional harmonic
//! injection and low-pass shaping, and additive Gaussian noise.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{euler_zyx, SimState};
use crate::real::Real;

/// Standard deviation of the additive white noise on every measured channel (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseStd {
    pub accel: f64,
    pub velocity: f64,
    pub position: f64,
    pub angular_rate: f64,
    pub attitude: f64,
}

impl Default for NoiseStd {
    fn default() -> Self {
        Self {
            accel: 0.0785,
            velocity: 0.0392,
            position: 0.0196,
            angular_rate: 0.0055,
            attitude: 0.0028,
        }
    }
}

impl NoiseStd {
    pub fn zero() -> Self {
        Self {
            accel: 0.0,
            velocity: 0.0,
            position: 0.0,
            angular_rate: 0.0,
            attitude: 0.0,
        }
    }
}

/// Extra harmonic of the rotor vibration, relative to the fundamental.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub order: u32,
    pub relative_amplitude: f64,
}

/// Second-order low-pass applied to the vibration share before sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowPassConfig {
    /// Natural pulsation (rad/s).
    pub pulsation: f64,
    pub damping_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImuConfig {
    /// Ratio of measured to actual vibration amplitude, in `(0, 1]`.
    pub damping: f64,
    pub noise: NoiseStd,
    /// Hz.
    pub sample_rate: f64,
    pub harmonics: Vec<Harmonic>,
    pub low_pass: Option<LowPassConfig>,
}

impl Default for ImuConfig {
    fn default() -> Self {
        Self {
            damping: 0.05,
            noise: NoiseStd::default(),
            sample_rate: 200.0,
            harmonics: Vec::new(),
            low_pass: None,
        }
    }
}

impl ImuConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParams(format!("imu damping {} outside (0, 1]", self.damping)));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::InvalidParams("imu sample rate must be positive".into()));
        }
        let n = &self.noise;
        if [n.accel, n.velocity, n.position, n.angular_rate, n.attitude]
            .iter()
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return Err(Error::InvalidParams("noise standard deviations must be finite and >= 0".into()));
        }
        if let Some(lp) = &self.low_pass {
            if !(lp.pulsation > 0.0 && lp.damping_ratio > 0.0) {
                return Err(Error::InvalidParams("low-pass pulsation and damping ratio must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One sampled measurement. Accelerations and rates are body-frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Measurement<T: Real> {
    pub accel: Vector3<T>,
    pub angular_rate: Vector3<T>,
    pub velocity: Vector3<T>,
    pub position: Vector3<T>,
    /// `(roll, pitch, yaw)`.
    pub attitude: Vector3<T>,
}

/// Rotor phase and fundamental vibration amplitude, used by the harmonic hook.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorPhase<T> {
    pub angle: T,
    /// Acceleration amplitude of the fundamental (m/s^2).
    pub amplitude: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LowPass {
    cfg: LowPassConfig,
    x: Vector3<f64>,
    rate: Vector3<f64>,
}

impl LowPass {
    fn step(&mut self, input: &Vector3<f64>, dt: f64) {
        let wn = self.cfg.pulsation;
        let accel = (input - self.x) * (wn * wn) - self.rate * (2.0 * self.cfg.damping_ratio * wn);
        self.rate += accel * dt;
        self.x += self.rate * dt;
    }
}

/// Stateful IMU with its own seeded noise stream.
#[derive(Debug, Clone)]
pub struct Imu {
    config: ImuConfig,
    rng: ChaCha12Rng,
    low_pass: Option<LowPass>,
}

impl Imu {
    pub fn new(config: ImuConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let low_pass = config.low_pass.map(|cfg| LowPass {
            cfg,
            x: Vector3::zeros(),
            rate: Vector3::zeros(),
        });
        Ok(Self {
            config,
            rng: ChaCha12Rng::seed_from_u64(seed),
            low_pass,
        })
    }

    pub fn config(&self) -> &ImuConfig {
        &self.config
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.config.sample_rate
    }

    /// Feeds the vibration acceleration to the optional low-pass. Call at the physics rate.
    pub fn track<T: Real>(&mut self, vibration_accel: &Vector3<T>, dt: T) {
        if let Some(lp) = &mut self.low_pass {
            lp.step(&vibration_accel.map(|x| x.as_f64()), dt.as_f64());
        }
    }

    fn gauss(&mut self, std: f64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        z * std
    }

    fn noise3(&mut self, std: f64) -> Vector3<f64> {
        let x = self.gauss(std);
        let y = self.gauss(std);
        let z = self.gauss(std);
        Vector3::new(x, y, z)
    }

    /// Samples the IMU.
    ///
    /// `accel` is the true body-frame `v'`; `vibration_accel` is its share caused by the
    /// vibration forces, `-(f_as + f_aa) / m`. That share is scaled by the damping factor (or
    /// replaced by the low-pass output when enabled) before noise is added.
    pub fn measure<T: Real>(
        &mut self,
        state: &SimState<T>,
        accel: &Vector3<T>,
        vibration_accel: &Vector3<T>,
        rotors: &[RotorPhase<T>],
    ) -> Measurement<T> {
        let d = self.config.damping;
        let raw = vibration_accel.map(|x| x.as_f64());
        let shaped = match &self.low_pass {
            Some(lp) => lp.x,
            None => raw,
        };
        let mut vib = shaped * d;
        for h in &self.config.harmonics {
            let k = h.order as f64;
            for r in rotors {
                let a = r.amplitude.as_f64() * h.relative_amplitude * d;
                let phase = k * r.angle.as_f64();
                vib += Vector3::new(phase.cos(), phase.sin(), 0.0) * a;
            }
        }
        let rigid = accel.map(|x| x.as_f64()) - raw;
        let n = self.config.noise;
        let accel = rigid + vib + self.noise3(n.accel);
        let angular_rate = state.angular_velocity.map(|x| x.as_f64()) + self.noise3(n.angular_rate);
        let velocity = state.velocity.map(|x| x.as_f64()) + self.noise3(n.velocity);
        let position = state.position.map(|x| x.as_f64()) + self.noise3(n.position);
        let attitude = euler_zyx(&state.attitude).map(|x| x.as_f64()) + self.noise3(n.attitude);
        let cast = |v: Vector3<f64>| v.map(T::lit);
        Measurement {
            accel: cast(accel),
            angular_rate: cast(angular_rate),
            velocity: cast(velocity),
            position: cast(position),
            attitude: cast(attitude),
        }
    }
}
