use nalgebra::Vector3;

use super::mass::Airframe;
use super::state::SimState;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Body,
    Earth,
}

/// Force and torque pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench<T: Real> {
    pub force: Vector3<T>,
    pub torque: Vector3<T>,
    pub frame: Frame,
}

impl<T: Real> Wrench<T> {
    pub fn zero(frame: Frame) -> Self {
        Self {
            force: Vector3::zeros(),
            torque: Vector3::zeros(),
            frame,
        }
    }

    pub fn body(force: Vector3<T>, torque: Vector3<T>) -> Self {
        Self {
            force,
            torque,
            frame: Frame::Body,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|x| x.is_finite_value())
    }
}

/// Rotor thrust and drag wrench in the body frame.
///
/// Per rotor the force is `w_i c_wi c_L th'|th'| e3`; with `-c_wi th' >= 0` it points along
/// `-e3`, i.e. upwards in NED. The torque adds the arm moments, the drag reaction
/// `-w_di c_D th'|th'| e3` and the asymmetric drag `w_ai c_D 2/(3r) th'|th'| e3`.
pub fn actuation_wrench<T: Real>(airframe: &Airframe<T>, speeds: &[T]) -> Wrench<T> {
    let p = &airframe.params;
    let e3 = Vector3::z();
    let asym_gain = p.drag_coeff * T::lit(2.0) / (T::lit(3.0) * p.blade_radius);
    let mut force = Vector3::zeros();
    let mut torque = Vector3::zeros();
    for (((w, arm), spin), speed) in airframe.weights.iter().zip(&p.arms).zip(&p.spins).zip(speeds) {
        let sq = *speed * speed.abs();
        let f = e3 * (w.mass * *spin * p.lift_coeff * sq);
        force += f;
        torque += arm.cross(&f);
        torque += e3 * (-w.drag * p.drag_coeff * sq + w.asymmetric_drag * asym_gain * sq);
    }
    Wrench::body(force, torque)
}

/// The same wrench from a full state, for callers that hold a [`SimState`].
pub fn actuation_wrench_at<T: Real>(airframe: &Airframe<T>, state: &SimState<T>) -> Wrench<T> {
    actuation_wrench(airframe, &state.rotor_speeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FaultState, VehicleParams};
    use approx::assert_relative_eq;

    #[test]
    fn stopped_rotors_give_zero_wrench() {
        let a = Airframe::<f64>::healthy(&VehicleParams::default());
        let w = actuation_wrench(&a, &[0.0; 8]);
        assert_eq!(w.force, Vector3::zeros());
        assert_eq!(w.torque, Vector3::zeros());
    }

    #[test]
    fn single_rotor_lift_points_up() {
        let p = VehicleParams::<f64>::default();
        let a = Airframe::healthy(&p);
        let magnitude = (3.0 / p.lift_coeff).sqrt();
        let mut speeds = [0.0; 8];
        speeds[0] = -p.spins[0] * magnitude;
        let w = actuation_wrench(&a, &speeds);
        assert_relative_eq!(w.force, Vector3::new(0.0, 0.0, -3.0), epsilon = 1e-12);
        // rotor 1 sits on +x: lifting it pitches the nose up (positive torque about y)
        assert_relative_eq!(w.torque.y, 0.275 * 3.0, epsilon = 1e-12);
        assert_relative_eq!(w.torque.z, p.drag_coeff * magnitude * magnitude * p.spins[0], epsilon = 1e-15);
    }

    #[test]
    fn equal_speeds_cancel_torque() {
        let p = VehicleParams::<f64>::default();
        let a = Airframe::healthy(&p);
        let speeds: Vec<f64> = p.spins.iter().map(|s| -s * 500.0).collect();
        let w = actuation_wrench(&a, &speeds);
        assert!(w.torque.norm() < 1e-12);
        assert_relative_eq!(w.force.z, -8.0 * p.lift_coeff * 250_000.0, epsilon = 1e-10);
    }

    #[test]
    fn hover_balances_weight() {
        let p = VehicleParams::<f64>::default();
        let a = Airframe::healthy(&p);
        let speeds: Vec<f64> = p.spins.iter().map(|s| -s * p.hover_speed()).collect();
        let w = actuation_wrench(&a, &speeds);
        assert_relative_eq!(w.force.z + a.mass * p.gravity, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn chipped_rotor_loses_lift() {
        let p = VehicleParams::<f64>::default();
        let a = Airframe::new(&p, &FaultState::chipped(&p, 1, 0.1, 0.0));
        let speeds: Vec<f64> = p.spins.iter().map(|s| -s * 500.0).collect();
        let w = actuation_wrench(&a, &speeds);
        assert_relative_eq!(w.force.z, -(7.0 + 0.95) * p.lift_coeff * 250_000.0, epsilon = 1e-10);
        assert!(w.torque.norm() > 1e-3);
    }
}
