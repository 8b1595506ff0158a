use serde::{Deserialize, Serialize};

use super::params::VehicleParams;
use crate::error::{Error, Result};
use crate::real::Real;

/// Blade lengths of every propeller after chipping, and the time the chipping appears.
///
/// Before `onset_time` every rotor is healthy; from `onset_time` on the radii below apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FaultState<T: Real> {
    /// `(r_1, r_2)` per rotor (m).
    pub radii: Vec<[T; 2]>,
    pub onset_time: T,
}

impl<T: Real> FaultState<T> {
    pub fn healthy(params: &VehicleParams<T>) -> Self {
        let r = params.blade_radius;
        Self {
            radii: vec![[r, r]; params.rotor_count()],
            onset_time: T::zero(),
        }
    }

    /// Removes `fraction` of the first blade of `rotor` (zero based) at `onset_time`.
    pub fn chipped(params: &VehicleParams<T>, rotor: usize, fraction: T, onset_time: T) -> Self {
        let mut fault = Self::healthy(params);
        fault.radii[rotor][0] = params.blade_radius * (T::one() - fraction);
        fault.onset_time = onset_time;
        fault
    }

    pub fn is_healthy(&self, params: &VehicleParams<T>) -> bool {
        let r = params.blade_radius;
        self.radii.iter().all(|pair| pair[0] == r && pair[1] == r)
    }

    /// The radii in force at time `t`.
    pub fn at_time(&self, params: &VehicleParams<T>, t: T) -> Self {
        if t >= self.onset_time {
            self.clone()
        } else {
            Self::healthy(params)
        }
    }

    pub fn validate(&self, params: &VehicleParams<T>) -> Result<()> {
        if self.radii.len() != params.rotor_count() {
            return Err(Error::InvalidParams(format!(
                "fault lists {} rotors, vehicle has {}",
                self.radii.len(),
                params.rotor_count()
            )));
        }
        let r = params.blade_radius;
        for (i, pair) in self.radii.iter().enumerate() {
            for len in pair {
                if *len < T::zero() || *len > r || !len.is_finite_value() {
                    return Err(Error::InvalidParams(format!(
                        "blade length {} of rotor {} outside [0, {}]",
                        len.as_f64(),
                        i + 1,
                        r.as_f64()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Dimensionless chipping weights of one rotor, plus the COM offset `k` of the propeller (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChipWeights<T> {
    /// Mass and lift scaling, `(r1 + r2) / 2r`.
    pub mass: T,
    /// Asymmetry, `(r1 - r2) / r`.
    pub asymmetry: T,
    /// Offset of the propeller centre of mass from the hub along blade 1 (m).
    pub offset: T,
    /// Drag torque scaling, `(r1^4 + r2^4) / 2r^4`.
    pub drag: T,
    /// Asymmetric drag scaling, `(r1 - r2)(r1^3 - r2^3) / 2r^4`.
    pub asymmetric_drag: T,
}

impl<T: Real> ChipWeights<T> {
    pub fn from_radii(r1: T, r2: T, radius: T) -> Self {
        let two = T::lit(2.0);
        let r4 = radius.powi(4);
        let asymmetry = (r1 - r2) / radius;
        Self {
            mass: (r1 + r2) / (two * radius),
            asymmetry,
            offset: radius / two * asymmetry,
            drag: (r1.powi(4) + r2.powi(4)) / (two * r4),
            asymmetric_drag: (r1 - r2) * (r1.powi(3) - r2.powi(3)) / (two * r4),
        }
    }
}

/// Chipping weights of every rotor.
pub fn chipping_weights<T: Real>(fault: &FaultState<T>, params: &VehicleParams<T>) -> Vec<ChipWeights<T>> {
    fault
        .radii
        .iter()
        .map(|[r1, r2]| ChipWeights::from_radii(*r1, *r2, params.blade_radius))
        .collect()
}
