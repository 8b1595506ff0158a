use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::trajectory::Reference;
use crate::error::{Error, Result};
use crate::model::{rotation_from_euler, VehicleParams};
use crate::sensing::Measurement;

/// Gains of the position and attitude loops. Attitude gains act on angular acceleration
/// (they are multiplied by the nominal inertia).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Gains {
    pub position_p: [f64; 3],
    pub position_d: [f64; 3],
    pub position_i: [f64; 3],
    pub attitude_p: [f64; 3],
    pub attitude_d: [f64; 3],
    pub attitude_i: [f64; 3],
    /// Maximum tilt of the thrust direction from vertical (rad).
    pub max_tilt: f64,
    /// Bound on each integrator state.
    pub integral_limit: f64,
    /// Bound on the yaw torque demand (N m). Yaw is the weakest axis of a coplanar vehicle;
    /// demands beyond what the allocator realises without slack leak into roll and pitch.
    pub max_yaw_torque: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            position_p: [3.0, 3.0, 4.0],
            position_d: [3.0, 3.0, 4.0],
            position_i: [0.5, 0.5, 1.0],
            attitude_p: [40.0, 40.0, 6.0],
            attitude_d: [10.0, 10.0, 3.0],
            attitude_i: [2.0, 2.0, 1.0],
            max_tilt: 0.5,
            integral_limit: 2.0,
            max_yaw_torque: 0.06,
        }
    }
}

impl Gains {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .position_p
            .iter()
            .chain(&self.position_d)
            .chain(&self.position_i)
            .chain(&self.attitude_p)
            .chain(&self.attitude_d)
            .chain(&self.attitude_i);
        if all.clone().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::InvalidParams("controller gains must be finite and >= 0".into()));
        }
        if !(self.max_tilt > 0.0 && self.max_tilt < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParams("max tilt must lie in (0, pi/2)".into()));
        }
        if !(self.max_yaw_torque > 0.0) {
            return Err(Error::InvalidParams("max yaw torque must be positive".into()));
        }
        if !(self.integral_limit >= 0.0) {
            return Err(Error::InvalidParams("integral limit must be >= 0".into()));
        }
        Ok(())
    }
}

/// Output of the position loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeCommand {
    pub attitude: Matrix3<f64>,
    /// Total thrust (N), along `-b3`.
    pub thrust: f64,
    /// The unclamped thrust was outside `[0, n u_max]`.
    pub thrust_clamped: bool,
}

/// Body wrench demand `(0, 0, -T, tau_x, tau_y, tau_z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrenchDemand {
    pub tau: Vector6<f64>,
    pub time: f64,
}

/// `vee` of a skew-symmetric matrix.
fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

fn clamp_vec(v: &Vector3<f64>, limit: f64) -> Vector3<f64> {
    v.map(|x| x.clamp(-limit, limit))
}

/// Cascaded position and attitude controller on the nominal rigid-body model.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    gains: Gains,
    mass: f64,
    gravity: f64,
    inertia: Matrix3<f64>,
    max_thrust: f64,
    dt: f64,
    position_integral: Vector3<f64>,
    attitude_integral: Vector3<f64>,
}

impl Controller {
    /// `dt` is the control period.
    pub fn new(params: &VehicleParams<f64>, gains: Gains, dt: f64) -> Result<Self> {
        gains.validate()?;
        Ok(Self {
            gains,
            mass: params.nominal_mass(),
            gravity: params.gravity,
            inertia: params.frame_inertia,
            max_thrust: params.max_lift * params.rotor_count() as f64,
            dt,
            position_integral: Vector3::zeros(),
            attitude_integral: Vector3::zeros(),
        })
    }

    pub fn gains(&self) -> &Gains {
        &self.gains
    }

    pub fn reset(&mut self) {
        self.position_integral = Vector3::zeros();
        self.attitude_integral = Vector3::zeros();
    }

    /// Position PID with acceleration and gravity feed-forward.
    pub fn outer_loop(&mut self, meas: &Measurement<f64>, reference: &Reference) -> AttitudeCommand {
        let g = &self.gains;
        let r = rotation_from_euler(&meas.attitude);
        let e_p = reference.position - meas.position;
        let e_v = reference.velocity - r * meas.velocity;
        self.position_integral = clamp_vec(&(self.position_integral + e_p * self.dt), g.integral_limit);
        let a_d = reference.accel
            + Vector3::from(g.position_p).component_mul(&e_p)
            + Vector3::from(g.position_d).component_mul(&e_v)
            + Vector3::from(g.position_i).component_mul(&self.position_integral);
        // force the rotors must supply, earth frame
        let force = (a_d - Vector3::z() * self.gravity) * self.mass;
        let body_z = r * Vector3::z();
        let mut b3 = if force.norm() > 1e-9 { -force.normalize() } else { body_z };
        let tilt = b3.z.clamp(-1.0, 1.0).acos();
        if tilt > g.max_tilt {
            let horizontal = Vector3::new(b3.x, b3.y, 0.0);
            let h = horizontal.norm();
            b3 = if h > 1e-12 {
                horizontal / h * g.max_tilt.sin() + Vector3::z() * g.max_tilt.cos()
            } else {
                Vector3::z()
            };
        }
        let raw = -force.dot(&body_z);
        let thrust = raw.clamp(0.0, self.max_thrust);
        let b1c = Vector3::new(reference.yaw.cos(), reference.yaw.sin(), 0.0);
        let b2 = b3.cross(&b1c).normalize();
        let b1 = b2.cross(&b3);
        AttitudeCommand {
            attitude: Matrix3::from_columns(&[b1, b2, b3]),
            thrust,
            thrust_clamped: raw != thrust,
        }
    }

    /// Attitude PID on `e_R = vee(R_d^T R - R^T R_d) / 2` with gyroscopic compensation.
    pub fn inner_loop(&mut self, meas: &Measurement<f64>, cmd: &AttitudeCommand, yaw_rate: f64, time: f64) -> WrenchDemand {
        let g = &self.gains;
        let r = rotation_from_euler(&meas.attitude);
        let rd = cmd.attitude;
        let e_r = vee(&(rd.transpose() * r - r.transpose() * rd)) * 0.5;
        let w_d = r.transpose() * rd * Vector3::new(0.0, 0.0, yaw_rate);
        let e_w = meas.angular_rate - w_d;
        let previous = self.attitude_integral;
        self.attitude_integral = clamp_vec(&(self.attitude_integral + e_r * self.dt), g.integral_limit);
        let w = meas.angular_rate;
        let alpha = |integral: &Vector3<f64>| {
            -Vector3::from(g.attitude_p).component_mul(&e_r)
                - Vector3::from(g.attitude_d).component_mul(&e_w)
                - Vector3::from(g.attitude_i).component_mul(integral)
        };
        let gyro = w.cross(&(self.inertia * w));
        let mut torque = gyro + self.inertia * alpha(&self.attitude_integral);
        if torque.z.abs() > g.max_yaw_torque {
            // conditional integration: hold the yaw integrator while the demand is clipped
            self.attitude_integral.z = previous.z;
            torque = gyro + self.inertia * alpha(&self.attitude_integral);
            torque.z = torque.z.clamp(-g.max_yaw_torque, g.max_yaw_torque);
        }
        WrenchDemand {
            tau: Vector6::new(0.0, 0.0, -cmd.thrust, torque.x, torque.y, torque.z),
            time,
        }
    }

    /// One control period: both loops.
    pub fn update(&mut self, meas: &Measurement<f64>, reference: &Reference, time: f64) -> (WrenchDemand, AttitudeCommand) {
        let cmd = self.outer_loop(meas, reference);
        (self.inner_loop(meas, &cmd, reference.yaw_rate, time), cmd)
    }
}
