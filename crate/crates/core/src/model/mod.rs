//! Multibody vehicle model: fault-dependent mass properties, wrenches, vibration forces and
//! the coupled equations of motion.

mod dynamics;
mod fault;
mod mass;
mod params;
mod state;
mod vibration;
mod wrench;

pub use dynamics::{
    derivative, evaluate, gyroscopic_torque, reaction_torques, rk4_step, Evaluation, ReactionTorques, MAX_CONDITION,
};
pub use fault::{chipping_weights, ChipWeights, FaultState};
pub use mass::{blade_direction, blade_inertia, mass_properties, rotated_blade_inertia, Airframe, MassProperties};
pub use params::VehicleParams;
pub use state::{euler_zyx, rotation_from_euler, SimState, StateDerivative};
pub use vibration::{
    hover_unbalance_force, vibration_forces, vibration_forces_matrix_form, xi_a, xi_s, BladeKinematics,
    VibrationForces,
};
pub use wrench::{actuation_wrench, actuation_wrench_at, Frame, Wrench};
