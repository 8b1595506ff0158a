//! Multirotor flight simulator with blade-chipping faults and an active fault detection and
//! isolation engine.
//!
//! The dynamics, allocation and residual kernels are generic over [`Real`] (`f32` or `f64`);
//! the closed-loop [`sim::Simulation`] runs in `f64`.

pub mod actuation;
pub mod allocation;
pub mod config;
pub mod control;
pub mod disturbance;
pub mod error;
pub mod fdi;
pub mod model;
pub mod real;
pub mod sensing;
pub mod sim;

pub use error::{Error, Result};
pub use real::Real;

/// Vehicle parameters in double precision.
pub type Params = model::VehicleParams<f64>;
/// Vehicle state in double precision.
pub type State = model::SimState<f64>;
/// Airframe in double precision.
pub type Vehicle = model::Airframe<f64>;
/// Allocator in double precision.
pub type Allocator64 = allocation::Allocator<f64>;
