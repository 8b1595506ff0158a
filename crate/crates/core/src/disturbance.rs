//! Exogenous wrench standing in for wind, payload swing and similar slow effects.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Wrench;

/// Sum of `components` sinusoids with random direction, phase and pulsation in
/// `[min_pulsation, max_pulsation]`, plus a constant bias. The force acts in the earth frame,
/// the torque in the body frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceConfig {
    pub enabled: bool,
    /// Constant earth-frame force (N).
    pub force_bias: [f64; 3],
    /// Peak amplitude of each force sinusoid (N).
    pub force_amplitude: f64,
    /// Peak amplitude of each torque sinusoid (N m).
    pub torque_amplitude: f64,
    pub components: usize,
    pub min_pulsation: f64,
    pub max_pulsation: f64,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            force_bias: [0.15, -0.1, 0.0],
            force_amplitude: 0.25,
            torque_amplitude: 0.004,
            components: 3,
            min_pulsation: 0.2,
            max_pulsation: 8.0,
        }
    }
}

impl DisturbanceConfig {
    pub fn none() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.force_amplitude >= 0.0
            && self.torque_amplitude >= 0.0
            && self.min_pulsation >= 0.0
            && self.min_pulsation <= self.max_pulsation
            && self.max_pulsation < 10.0
            && self.force_bias.iter().all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(
                "disturbance amplitudes must be >= 0 and pulsations within [0, 10) rad/s".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Tone {
    force: Vector3<f64>,
    torque: Vector3<f64>,
    pulsation: f64,
    phase: f64,
}

/// Realisation of a [`DisturbanceConfig`] for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Disturbance {
    bias: Vector3<f64>,
    tones: Vec<Tone>,
}

fn unit(rng: &mut ChaCha12Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

impl Disturbance {
    pub fn new(config: &DisturbanceConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if !config.enabled {
            return Ok(Self {
                bias: Vector3::zeros(),
                tones: Vec::new(),
            });
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let tones = (0..config.components)
            .map(|_| Tone {
                force: unit(&mut rng) * config.force_amplitude,
                torque: unit(&mut rng) * config.torque_amplitude,
                pulsation: rng.random_range(config.min_pulsation..=config.max_pulsation),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            })
            .collect();
        Ok(Self {
            bias: Vector3::from(config.force_bias),
            tones,
        })
    }

    /// Earth-frame force and body-frame torque at time `t`.
    pub fn at(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        self.tones.iter().fold((self.bias, Vector3::zeros()), |(f, tq), tone| {
            let s = (tone.pulsation * t + tone.phase).sin();
            (f + tone.force * s, tq + tone.torque * s)
        })
    }

    /// The wrench at `t` expressed in the body frame of attitude `r`.
    pub fn body_wrench(&self, t: f64, r: &nalgebra::Matrix3<f64>) -> Wrench<f64> {
        let (f, tq) = self.at(t);
        Wrench::body(r.transpose() * f, tq)
    }

    pub fn max_pulsation(&self) -> f64 {
        self.tones.iter().map(|t| t.pulsation).fold(0.0, f64::max)
    }
}
