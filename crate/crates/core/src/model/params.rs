use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Physical constants and geometry of a coplanar multirotor.
///
/// Rotors are indexed from zero in code; user-facing files and reports count from one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields, default)]
pub struct VehicleParams<T: Real> {
    /// Mass of the central body (kg).
    pub frame_mass: T,
    /// Mass of one healthy propeller (kg).
    pub prop_mass: T,
    /// Inertia tensor of the central body in its own frame (kg m^2).
    pub frame_inertia: Matrix3<T>,
    pub gravity: T,
    /// Offsets from the frame origin to each rotor hub, body frame (m). Third component zero.
    pub arms: Vec<Vector3<T>>,
    /// Spin sign per rotor, +1 or -1. Rotor speeds satisfy `-spin * speed >= 0`.
    pub spins: Vec<T>,
    /// Healthy blade length from the hub (m).
    pub blade_radius: T,
    /// Blade chord (m).
    pub blade_width: T,
    /// Lift coefficient (N s^2).
    pub lift_coeff: T,
    /// Drag coefficient (N m s^2).
    pub drag_coeff: T,
    /// Linear friction coefficient.
    pub linear_friction: T,
    /// Angular friction coefficient.
    pub angular_friction: T,
    /// Maximum lift of one rotor (N).
    pub max_lift: T,
    /// Rotor speed saturation (rad/s).
    pub max_speed: T,
    /// Powertrain time constant (s).
    pub powertrain_tau: T,
}

impl<T: Real> VehicleParams<T> {
    /// Coplanar multirotor with `n` arms of length `arm_length` spaced evenly from the body x axis,
    /// spins alternating `+, -, +, ...`, and the remaining constants set to the octarotor values.
    pub fn multirotor(n: usize, arm_length: T) -> Self {
        let two_pi = T::two_pi();
        let (arms, spins) = (0..n)
            .map(|i| {
                let angle = two_pi * T::count(i) / T::count(n);
                let arm = Vector3::new(arm_length * angle.cos(), arm_length * angle.sin(), T::zero());
                let spin = if i % 2 == 0 { T::one() } else { -T::one() };
                (arm, spin)
            })
            .unzip();
        Self {
            frame_mass: T::lit(1.55),
            prop_mass: T::lit(0.13),
            frame_inertia: Matrix3::from_diagonal(&Vector3::new(
                T::lit(0.0266),
                T::lit(0.0266),
                T::lit(0.0498),
            )),
            gravity: T::lit(9.81),
            arms,
            spins,
            blade_radius: T::lit(0.12),
            blade_width: T::lit(0.025),
            lift_coeff: T::lit(1.23e-5),
            drag_coeff: T::lit(1.10e-7),
            linear_friction: T::lit(3.2e-2),
            angular_friction: T::lit(5.57e-4),
            max_lift: T::lit(4.75),
            max_speed: T::lit(620.97),
            powertrain_tau: T::lit(0.1),
        }
    }

    /// The eight-rotor vehicle with 0.275 m arms.
    pub fn octarotor() -> Self {
        Self::multirotor(8, T::lit(0.275))
    }

    pub fn rotor_count(&self) -> usize {
        self.arms.len()
    }

    /// Mass of the healthy vehicle, frame plus all propellers.
    pub fn nominal_mass(&self) -> T {
        self.frame_mass + self.prop_mass * T::count(self.rotor_count())
    }

    /// Per-rotor lift that balances gravity on the healthy vehicle.
    pub fn hover_lift(&self) -> T {
        self.nominal_mass() * self.gravity / T::count(self.rotor_count())
    }

    /// Rotor speed magnitude producing [`Self::hover_lift`].
    pub fn hover_speed(&self) -> T {
        (self.hover_lift() / self.lift_coeff).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rotor_count();
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        if n < 4 {
            return fail(format!("need at least 4 rotors, got {n}"));
        }
        if self.spins.len() != n {
            return fail(format!("{} spin signs for {n} arms", self.spins.len()));
        }
        let positive = [
            ("frame_mass", self.frame_mass),
            ("prop_mass", self.prop_mass),
            ("blade_radius", self.blade_radius),
            ("blade_width", self.blade_width),
            ("lift_coeff", self.lift_coeff),
            ("drag_coeff", self.drag_coeff),
            ("max_lift", self.max_lift),
            ("max_speed", self.max_speed),
            ("powertrain_tau", self.powertrain_tau),
        ];
        for (name, value) in positive {
            if !(value > T::zero()) || !value.is_finite_value() {
                return fail(format!("{name} must be strictly positive and finite"));
            }
        }
        // Friction and gravity may be zeroed for conservation experiments.
        for (name, value) in [
            ("gravity", self.gravity),
            ("linear_friction", self.linear_friction),
            ("angular_friction", self.angular_friction),
        ] {
            if value < T::zero() || !value.is_finite_value() {
                return fail(format!("{name} must be non-negative and finite"));
            }
        }
        for (i, arm) in self.arms.iter().enumerate() {
            if arm.z != T::zero() {
                return fail(format!("arm {} is not coplanar (z = {})", i + 1, arm.z.as_f64()));
            }
        }
        for (i, s) in self.spins.iter().enumerate() {
            if *s != T::one() && *s != -T::one() {
                return fail(format!("spin of rotor {} must be +1 or -1", i + 1));
            }
        }
        let eig = self.frame_inertia.symmetric_eigenvalues();
        if eig.iter().any(|e| !(*e > T::zero())) {
            return fail("frame inertia must be symmetric positive definite".to_string());
        }
        Ok(())
    }
}

impl<T: Real> Default for VehicleParams<T> {
    fn default() -> Self {
        Self::octarotor()
    }
}
