//! Reference trajectories and the cascaded tracking controller.

mod controller;
mod trajectory;

pub use controller::{AttitudeCommand, Controller, Gains, WrenchDemand};
pub use trajectory::{Reference, Trajectory, TrajectoryKind};
