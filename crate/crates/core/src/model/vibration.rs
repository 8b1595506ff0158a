use nalgebra::{Matrix3, Vector3};

use super::mass::{blade_direction, Airframe};
use crate::real::Real;

/// Blade direction and its first two time derivatives in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BladeKinematics<T: Real> {
    pub p: Vector3<T>,
    pub p_dot: Vector3<T>,
    pub p_ddot: Vector3<T>,
}

impl<T: Real> BladeKinematics<T> {
    /// `p = (cos th, sin th, 0)`, `p' = th' e3 x p`, `p'' = th'' e3 x p + th' e3 x p'`.
    pub fn new(angle: T, speed: T, accel: T) -> Self {
        let p = blade_direction(angle);
        let e3p = Vector3::new(-p.y, p.x, T::zero());
        Self {
            p,
            p_dot: e3p * speed,
            p_ddot: e3p * accel - p * (speed * speed),
        }
    }
}

/// `Xi_s = hat(w)^2 + hat(w')`.
pub fn xi_s<T: Real>(omega: &Vector3<T>, omega_dot: &Vector3<T>) -> Matrix3<T> {
    let w = omega.cross_matrix();
    w * w + omega_dot.cross_matrix()
}

/// `Xi_a = hat(w)^2 + hat(w') + 2 th' hat(w) hat(e3) + th'' hat(e3) - th'^2 I`.
pub fn xi_a<T: Real>(omega: &Vector3<T>, omega_dot: &Vector3<T>, speed: T, accel: T) -> Matrix3<T> {
    let w = omega.cross_matrix();
    let e3 = Vector3::<T>::z().cross_matrix();
    xi_s(omega, omega_dot) + w * e3 * (T::lit(2.0) * speed) + e3 * accel - Matrix3::identity() * (speed * speed)
}

/// Vibration forces `(f_as, f_aa)` from the arm and unbalance masses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VibrationForces<T: Real> {
    pub arm: Vector3<T>,
    pub unbalance: Vector3<T>,
}

impl<T: Real> VibrationForces<T> {
    pub fn total(&self) -> Vector3<T> {
        self.arm + self.unbalance
    }
}

/// Evaluates `f_as = sum m_i (w x (w x l_i) + w' x l_i)` and
/// `f_aa = sum m_i k_i (w x (w x p_i) + 2 w x p_i' + w' x p_i + p_i'')` term by term.
pub fn vibration_forces<T: Real>(
    airframe: &Airframe<T>,
    omega: &Vector3<T>,
    omega_dot: &Vector3<T>,
    angles: &[T],
    speeds: &[T],
    accels: &[T],
) -> VibrationForces<T> {
    let arm = omega.cross(&omega.cross(&airframe.arm_moment)) + omega_dot.cross(&airframe.arm_moment);
    let mut unbalance = Vector3::zeros();
    for i in 0..airframe.rotor_count() {
        let mk = airframe.prop_masses[i] * airframe.weights[i].offset;
        if mk == T::zero() {
            continue;
        }
        let b = BladeKinematics::new(angles[i], speeds[i], accels[i]);
        let term = omega.cross(&omega.cross(&b.p))
            + omega.cross(&b.p_dot) * T::lit(2.0)
            + omega_dot.cross(&b.p)
            + b.p_ddot;
        unbalance += term * mk;
    }
    VibrationForces { arm, unbalance }
}

/// The same forces through `Xi_s` and `Xi_a`: `f_as = Xi_s sum m_i l_i`, `f_aa = sum m_i k_i Xi_a p_i`.
pub fn vibration_forces_matrix_form<T: Real>(
    airframe: &Airframe<T>,
    omega: &Vector3<T>,
    omega_dot: &Vector3<T>,
    angles: &[T],
    speeds: &[T],
    accels: &[T],
) -> VibrationForces<T> {
    let arm = xi_s(omega, omega_dot) * airframe.arm_moment;
    let mut unbalance = Vector3::zeros();
    for i in 0..airframe.rotor_count() {
        let mk = airframe.prop_masses[i] * airframe.weights[i].offset;
        unbalance += xi_a(omega, omega_dot, speeds[i], accels[i]) * blade_direction(angles[i]) * mk;
    }
    VibrationForces { arm, unbalance }
}

/// `f_aa` in ideal hover for rotor `i`: `-k_i m_i th'^2 (cos th' t, sin th' t, 0)`.
pub fn hover_unbalance_force<T: Real>(airframe: &Airframe<T>, rotor: usize, speed: T, t: T) -> Vector3<T> {
    let mk = airframe.prop_masses[rotor] * airframe.weights[rotor].offset;
    blade_direction(speed * t) * (-mk * speed * speed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FaultState, VehicleParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn vec3() -> impl Strategy<Value = Vector3<f64>> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
    }

    fn rotors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(-10.0..10.0f64, 8),
            prop::collection::vec(-620.0..620.0f64, 8),
            prop::collection::vec(-500.0..500.0f64, 8),
        )
    }

    #[test]
    fn blade_kinematics_match_finite_differences() {
        let (th, w, a) = (0.7, 13.0, -4.0);
        let h = 1e-5;
        let angle = |t: f64| th + w * t + 0.5 * a * t * t;
        let p = |t: f64| blade_direction(angle(t));
        let b = BladeKinematics::new(th, w, a);
        let d1 = (p(h) - p(-h)) / (2.0 * h);
        let d2 = (p(h) - p(0.0) * 2.0 + p(-h)) / (h * h);
        assert_relative_eq!(b.p_dot, d1, epsilon = 1e-6);
        assert_relative_eq!(b.p_ddot, d2, epsilon = 1e-3);
    }

    #[test]
    fn chipped_hover_is_a_pure_sinusoid() {
        let p = VehicleParams::<f64>::default();
        let a = Airframe::new(&p, &FaultState::chipped(&p, 1, 0.1, 0.0));
        let speed = -p.spins[1] * 520.0;
        let zero = Vector3::zeros();
        for k in 0..50 {
            let t = k as f64 * 1.3e-3;
            let mut angles = vec![0.0; 8];
            let mut speeds = vec![0.0; 8];
            angles[1] = speed * t;
            speeds[1] = speed;
            let f = vibration_forces(&a, &zero, &zero, &angles, &speeds, &[0.0; 8]);
            assert_relative_eq!(f.unbalance, hover_unbalance_force(&a, 1, speed, t), epsilon = 1e-9);
            assert_eq!(f.unbalance.z, 0.0);
        }
        // |f_aa| = |k| m th'^2 for the 10% chip; ~200 N before any damping
        let f = hover_unbalance_force(&a, 1, 520.0, 0.0);
        assert_relative_eq!(f.norm(), 0.006 * 0.1235 * 520.0 * 520.0, max_relative = 1e-12);
        assert_relative_eq!(f.norm(), 200.3664, epsilon = 1e-3);
    }

    proptest! {
        #[test]
        fn healthy_vehicle_has_no_vibration(w in vec3(), wd in vec3(), (th, sp, ac) in rotors()) {
            let a = Airframe::<f64>::healthy(&VehicleParams::default());
            let f = vibration_forces(&a, &w, &wd, &th, &sp, &ac);
            prop_assert!(f.arm.norm() < 1e-12);
            prop_assert_eq!(f.unbalance, Vector3::zeros());
        }

        #[test]
        fn matrix_form_agrees(w in vec3(), wd in vec3(), (th, sp, ac) in rotors(),
                             rotor in 0usize..8, chip in 0.01..0.5f64) {
            let p = VehicleParams::<f64>::default();
            let a = Airframe::new(&p, &FaultState::chipped(&p, rotor, chip, 0.0));
            let direct = vibration_forces(&a, &w, &wd, &th, &sp, &ac);
            let form = vibration_forces_matrix_form(&a, &w, &wd, &th, &sp, &ac);
            let scale = 1.0 + direct.total().norm();
            prop_assert!((direct.arm - form.arm).norm() < 1e-10 * scale);
            prop_assert!((direct.unbalance - form.unbalance).norm() < 1e-10 * scale);
        }
    }
}
