//! First-order ESC and motor model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::VehicleParams;
use crate::real::Real;

/// Rotor speed reference for a lift demand: `sqrt(u / c_L)` signed so that `-c_w th' >= 0`.
pub fn lift_to_speed<T: Real>(lift: T, lift_coeff: T, spin: T) -> Result<T> {
    if lift < T::zero() || !lift.is_finite_value() {
        return Err(Error::NegativeLift(lift.as_f64()));
    }
    Ok(-spin * (lift / lift_coeff).sqrt())
}

/// `c_L th'^2`.
#[inline]
pub fn speed_to_lift<T: Real>(speed: T, lift_coeff: T) -> T {
    lift_coeff * speed * speed
}

/// Normalised throttle `u / u_max`, clamped to `[0, 1]`.
#[inline]
pub fn pwm<T: Real>(lift: T, max_lift: T) -> T {
    (lift / max_lift).clamp(T::zero(), T::one())
}

/// ESC bank: holds the clamped speed references and evaluates `th'' = -lambda (th' - th'_ref)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MotorBank<T: Real> {
    pub bandwidth: Vec<T>,
    pub references: Vec<T>,
    pub spins: Vec<T>,
    pub lift_coeff: T,
    pub max_lift: T,
    pub max_speed: T,
}

impl<T: Real> MotorBank<T> {
    pub fn new(params: &VehicleParams<T>) -> Self {
        let n = params.rotor_count();
        Self {
            bandwidth: vec![T::one() / params.powertrain_tau; n],
            references: vec![T::zero(); n],
            spins: params.spins.clone(),
            lift_coeff: params.lift_coeff,
            max_lift: params.max_lift,
            max_speed: params.max_speed,
        }
    }

    pub fn len(&self) -> usize {
        self.references.len()
    }

    pub fn is_empty(&self) -> bool {
        self.references.is_empty()
    }

    /// Sets speed references from lifts. Speeds above saturation are clamped.
    pub fn command_lifts(&mut self, lifts: &[T]) -> Result<()> {
        for i in 0..self.len() {
            let speed = lift_to_speed(lifts[i], self.lift_coeff, self.spins[i])?;
            self.references[i] = self.clamp(i, speed);
        }
        Ok(())
    }

    /// Sets raw speed references, clamped to the spin direction and saturation.
    pub fn command_speeds(&mut self, speeds: &[T]) {
        for i in 0..self.len() {
            self.references[i] = self.clamp(i, speeds[i]);
        }
    }

    fn clamp(&self, i: usize, speed: T) -> T {
        let magnitude = (-self.spins[i] * speed).clamp(T::zero(), self.max_speed);
        -self.spins[i] * magnitude
    }

    /// Rotor accelerations at the given speeds.
    pub fn derivative(&self, speeds: &[T]) -> Vec<T> {
        speeds
            .iter()
            .zip(&self.references)
            .zip(&self.bandwidth)
            .map(|((s, r), l)| -*l * (*s - *r))
            .collect()
    }

    pub fn derivative_into(&self, speeds: &[T], out: &mut [T]) {
        for i in 0..self.len() {
            out[i] = -self.bandwidth[i] * (speeds[i] - self.references[i]);
        }
    }

    /// Throttle of every motor at the given speeds.
    pub fn pwm(&self, speeds: &[T]) -> Vec<T> {
        speeds
            .iter()
            .map(|s| pwm(speed_to_lift(*s, self.lift_coeff), self.max_lift))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bank() -> MotorBank<f64> {
        MotorBank::new(&VehicleParams::default())
    }

    #[test]
    fn zero_lift_gives_zero_speed() {
        assert_eq!(lift_to_speed(0.0, 1.23e-5, 1.0).unwrap(), 0.0);
        assert_eq!(pwm(0.0, 4.75), 0.0);
        assert_eq!(pwm(4.75, 4.75), 1.0);
    }

    #[test]
    fn lift_inverts_to_speed() {
        let u = 1.23e-5 * 520.0 * 520.0;
        assert_relative_eq!(u, 3.32592, epsilon = 1e-5);
        assert_relative_eq!(lift_to_speed(u, 1.23e-5, -1.0).unwrap(), 520.0, epsilon = 1e-10);
        assert_relative_eq!(lift_to_speed(u, 1.23e-5, 1.0).unwrap(), -520.0, epsilon = 1e-10);
    }

    #[test]
    fn negative_lift_is_an_error() {
        assert!(matches!(lift_to_speed(-1e-3, 1.23e-5, 1.0), Err(Error::NegativeLift(_))));
        assert!(bank().command_lifts(&[-1.0; 8]).is_err());
    }

    #[test]
    fn equilibrium_has_no_acceleration() {
        let mut b = bank();
        b.command_lifts(&[3.0; 8]).unwrap();
        let speeds = b.references.clone();
        assert!(b.derivative(&speeds).iter().all(|a| *a == 0.0));
    }

    fn integrate(b: &MotorBank<f64>, mut speeds: Vec<f64>, seconds: f64) -> Vec<f64> {
        let h = 1e-3;
        for _ in 0..(seconds / h).round() as usize {
            let k1 = b.derivative(&speeds);
            let s2: Vec<f64> = speeds.iter().zip(&k1).map(|(s, k)| s + 0.5 * h * k).collect();
            let k2 = b.derivative(&s2);
            let s3: Vec<f64> = speeds.iter().zip(&k2).map(|(s, k)| s + 0.5 * h * k).collect();
            let k3 = b.derivative(&s3);
            let s4: Vec<f64> = speeds.iter().zip(&k3).map(|(s, k)| s + h * k).collect();
            let k4 = b.derivative(&s4);
            for i in 0..speeds.len() {
                speeds[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        speeds
    }

    #[test]
    fn step_response_reaches_63_percent_after_one_time_constant() {
        let mut b = bank();
        b.command_speeds(&[-400.0, 400.0, -400.0, 400.0, -400.0, 400.0, -400.0, 400.0]);
        let s = integrate(&b, vec![0.0; 8], 0.1);
        assert_relative_eq!(s[0] / -400.0, 1.0 - (-1.0f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn saturated_reference_settles_at_limit() {
        let mut b = bank();
        b.command_lifts(&[10.0; 8]).unwrap();
        let s = integrate(&b, vec![0.0; 8], 3.0);
        for (speed, spin) in s.iter().zip(&b.spins) {
            assert_relative_eq!(-spin * speed, 620.97, epsilon = 1e-6);
        }
    }

    proptest! {
        #[test]
        fn speed_lift_round_trip(u in 1e-9..4.75f64) {
            let s = lift_to_speed(u, 1.23e-5, 1.0).unwrap();
            prop_assert!((speed_to_lift(s, 1.23e-5) - u).abs() <= 1e-12 * u);
        }

        #[test]
        fn random_references_never_exceed_saturation(refs in prop::collection::vec(prop::collection::vec(-2000.0..2000.0f64, 8), 1..40)) {
            let mut b = bank();
            let mut speeds = vec![0.0; 8];
            for r in refs {
                b.command_speeds(&r);
                speeds = integrate(&b, speeds, 0.02);
                for (s, spin) in speeds.iter().zip(&b.spins) {
                    let m = -spin * s;
                    prop_assert!(m >= -1e-9 && m <= 620.97 + 1e-9);
                }
            }
        }
    }
}
