use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use super::mass::{rotated_blade_inertia, Airframe};
use super::state::{SimState, StateDerivative};
use super::vibration::{vibration_forces, BladeKinematics, VibrationForces};
use super::wrench::{actuation_wrench, Wrench};
use crate::actuation::MotorBank;
use crate::error::{Error, Result};
use crate::real::Real;

/// Condition estimate above which the mass matrix is reported as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Torques `(tau_a, tau_gyro)` exchanged between the frame and the rotating propellers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionTorques<T: Real> {
    pub unbalance: Vector3<T>,
    pub gyroscopic: Vector3<T>,
}

/// Everything computed while evaluating the equations of motion at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T: Real> {
    pub derivative: StateDerivative<T>,
    pub vibration: VibrationForces<T>,
    pub reaction: ReactionTorques<T>,
    pub actuation: Wrench<T>,
    /// The 6x6 generalised mass matrix.
    pub mass_matrix: Matrix6<T>,
    /// `(max L_ii / min L_ii)^2` of its Cholesky factor.
    pub condition: T,
}

/// `sum th'_i [hat(e3), I_i] w + I_iz th'_i (w x e3) + I_iz th''_i e3`.
pub fn gyroscopic_torque<T: Real>(
    airframe: &Airframe<T>,
    omega: &Vector3<T>,
    angles: &[T],
    speeds: &[T],
    accels: &[T],
) -> Vector3<T> {
    let e3 = Vector3::<T>::z();
    let e3x = e3.cross_matrix();
    let w_e3 = omega.cross(&e3);
    let mut acc = Vector3::zeros();
    for i in 0..airframe.rotor_count() {
        let principal = &airframe.blade_inertias[i];
        let inertia = rotated_blade_inertia(principal, angles[i]);
        let commutator: Matrix3<T> = e3x * inertia - inertia * e3x;
        acc += commutator * omega * speeds[i] + w_e3 * (principal.z * speeds[i]) + e3 * (principal.z * accels[i]);
    }
    acc
}

/// `tau_a = sum p_0i x (m v' + m w x v + f_as + f_aa)` and `tau_gyro` for given accelerations.
///
/// The per-rotor offsets `p_0i = (m_i / m)(l_i + k_i p_i)` add up to the centre of mass, so
/// `tau_a = r_g x (...)`.
pub fn reaction_torques<T: Real>(
    airframe: &Airframe<T>,
    state: &SimState<T>,
    v_dot: &Vector3<T>,
    omega_dot: &Vector3<T>,
    rotor_accels: &[T],
) -> ReactionTorques<T> {
    let w = &state.angular_velocity;
    let vib = vibration_forces(airframe, w, omega_dot, &state.blade_angles, &state.rotor_speeds, rotor_accels);
    let com = airframe.mass_properties(&state.blade_angles).com;
    let m = airframe.mass;
    let linear = v_dot * m + w.cross(&state.velocity) * m + vib.total();
    ReactionTorques {
        unbalance: com.cross(&linear),
        gyroscopic: gyroscopic_torque(airframe, w, &state.blade_angles, &state.rotor_speeds, rotor_accels),
    }
}

/// Solves the coupled equations of motion for `(v', w')` and returns every state derivative.
///
/// `f_as`, `f_aa` and `tau_a` are linear in `(v', w')`; collecting those terms gives
/// `A [v'; w'] = b` with `A = [[m I, -hat(c)], [hat(c), I - hat(c) hat(c) / m]]`, `c = m r_g`.
/// `external` is a body-frame wrench added to the right-hand side.
pub fn evaluate<T: Real>(
    airframe: &Airframe<T>,
    state: &SimState<T>,
    rotor_accels: &[T],
    external: &Wrench<T>,
) -> Result<Evaluation<T>> {
    let p = &airframe.params;
    let n = airframe.rotor_count();
    let m = airframe.mass;
    let w = state.angular_velocity;
    let v = state.velocity;
    let r = &state.attitude;
    let e3 = Vector3::<T>::z();

    let props = airframe.mass_properties(&state.blade_angles);
    let c = props.com * m;
    let c_hat = c.cross_matrix();

    // velocity-dependent linear terms of f_as + f_aa, plus m w x v
    let mut rotating = Vector3::zeros();
    for i in 0..n {
        let mk = airframe.prop_masses[i] * airframe.weights[i].offset;
        if mk == T::zero() {
            continue;
        }
        let b = BladeKinematics::new(state.blade_angles[i], state.rotor_speeds[i], rotor_accels[i]);
        rotating += (w.cross(&b.p_dot) * T::lit(2.0) + b.p_ddot) * mk;
    }
    let rest = w.cross(&v) * m + w.cross(&w.cross(&c)) + rotating;

    let actuation = actuation_wrench(airframe, &state.rotor_speeds);
    let gravity = r.transpose() * e3 * (m * p.gravity);
    let friction = -v * p.linear_friction;
    let friction_torque = -w * p.angular_friction;
    let gyro = gyroscopic_torque(airframe, &w, &state.blade_angles, &state.rotor_speeds, rotor_accels);

    let b_lin = gravity + actuation.force + friction + external.force - rest;
    let b_ang = props.com.cross(&gravity) + friction_torque + actuation.torque + external.torque
        - w.cross(&(props.inertia * w))
        - gyro
        - props.com.cross(&rest);

    let mut a = Matrix6::<T>::zeros();
    a.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Matrix3::identity() * m));
    a.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-c_hat));
    a.fixed_view_mut::<3, 3>(3, 0).copy_from(&c_hat);
    a.fixed_view_mut::<3, 3>(3, 3).copy_from(&(props.inertia - c_hat * c_hat / m));

    let chol = a.cholesky().ok_or(Error::SingularMassMatrix(f64::INFINITY))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((T::infinity(), T::zero()), |(lo, hi), d| (lo.min(*d), hi.max(*d)));
    let condition = (hi / lo) * (hi / lo);
    if !(condition.as_f64() <= MAX_CONDITION) {
        return Err(Error::SingularMassMatrix(condition.as_f64()));
    }
    let rhs = Vector6::new(b_lin.x, b_lin.y, b_lin.z, b_ang.x, b_ang.y, b_ang.z);
    let sol = chol.solve(&rhs);
    let v_dot = Vector3::new(sol[0], sol[1], sol[2]);
    let omega_dot = Vector3::new(sol[3], sol[4], sol[5]);

    let vibration = vibration_forces(airframe, &w, &omega_dot, &state.blade_angles, &state.rotor_speeds, rotor_accels);
    let reaction = ReactionTorques {
        unbalance: props.com.cross(&(v_dot * m + w.cross(&v) * m + vibration.total())),
        gyroscopic: gyro,
    };

    Ok(Evaluation {
        derivative: StateDerivative {
            position: r * v,
            attitude: r * w.cross_matrix(),
            velocity: v_dot,
            angular_velocity: omega_dot,
            blade_angles: state.rotor_speeds.clone(),
            rotor_speeds: rotor_accels.to_vec(),
        },
        vibration,
        reaction,
        actuation,
        mass_matrix: a,
        condition,
    })
}

/// State derivative with the rotor accelerations taken from the motor bank.
pub fn derivative<T: Real>(
    airframe: &Airframe<T>,
    state: &SimState<T>,
    motors: &MotorBank<T>,
    external: &Wrench<T>,
) -> Result<StateDerivative<T>> {
    let accels = motors.derivative(&state.rotor_speeds);
    Ok(evaluate(airframe, state, &accels, external)?.derivative)
}

/// One classical fourth-order Runge-Kutta step of length `h`, followed by attitude
/// re-orthonormalisation. Motor references and the external wrench are held over the step.
pub fn rk4_step<T: Real>(
    airframe: &Airframe<T>,
    state: &SimState<T>,
    motors: &MotorBank<T>,
    external: &Wrench<T>,
    h: T,
) -> Result<SimState<T>> {
    let half = h * T::lit(0.5);
    let k1 = derivative(airframe, state, motors, external)?;
    let k2 = derivative(airframe, &state.advanced(&k1, half), motors, external)?;
    let k3 = derivative(airframe, &state.advanced(&k2, half), motors, external)?;
    let k4 = derivative(airframe, &state.advanced(&k3, h), motors, external)?;
    let mut next = state.advanced(&StateDerivative::rk4_blend(&k1, &k2, &k3, &k4), h);
    next.reorthonormalize();
    let turn = T::two_pi();
    for a in &mut next.blade_angles {
        *a = *a - (*a / turn).floor() * turn;
    }
    if !next.is_finite() {
        return Err(Error::SimDiverged("non-finite state after an integration step".into()));
    }
    Ok(next)
}
