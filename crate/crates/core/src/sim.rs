//! Closed-loop flight: plant at the physics rate, sensing, FDI, control and allocation at the
//! control rate.
//!
//! Each control cycle at `t_k` samples the IMU, runs the FDI engine, computes the wrench
//! demand and allocates it; the resulting motor references are held over the following
//! `control_divider` physics steps. The whole loop is a value: cloning a [`Simulation`] forks
//! the flight, random streams included.

use nalgebra::{DVector, Vector3};

use crate::actuation::MotorBank;
use crate::allocation::{Allocator, PinDirective};
use crate::config::RunConfig;
use crate::control::{Controller, Reference, Trajectory};
use crate::disturbance::Disturbance;
use crate::error::{Error, Result};
use crate::fdi::{FdiEngine, Phase, Residuals};
use crate::model::{evaluate, euler_zyx, rk4_step, rotation_from_euler, Airframe, FaultState, SimState, VibrationForces};
use crate::sensing::{Imu, Measurement, RotorPhase};

/// Position norm beyond which the flight is declared diverged (m).
pub const DIVERGENCE_RADIUS: f64 = 1e4;

/// Ground truth at a control instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub accel: Vector3<f64>,
    pub angular_accel: Vector3<f64>,
    pub vibration: VibrationForces<f64>,
}

/// Everything logged at one control cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle: u64,
    pub time: f64,
    pub state: SimState<f64>,
    pub reference: Reference,
    pub measurement: Measurement<f64>,
    pub truth: Truth,
    pub residuals: Residuals,
    pub phase: Phase,
    pub pin: Option<PinDirective<f64>>,
    /// Wrench demand `(0, 0, -T, tau)`.
    pub demand: nalgebra::Vector6<f64>,
    pub lifts: DVector<f64>,
    pub slack: f64,
    pub allocation_fallback: bool,
    pub thrust_clamped: bool,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    config: RunConfig,
    fault: FaultState<f64>,
    airframe: Airframe<f64>,
    fault_applied: bool,
    state: SimState<f64>,
    motors: MotorBank<f64>,
    imu: Imu,
    controller: Controller,
    allocator: Allocator<f64>,
    fdi: FdiEngine,
    disturbance: Disturbance,
    step: u64,
    cycle: u64,
}

/// Initial state on the reference at `t = 0` with every rotor at hover speed.
pub fn initial_state(config: &RunConfig, trajectory: &Trajectory) -> SimState<f64> {
    let p = &config.vehicle;
    let r0 = trajectory.reference(0.0);
    let mut s = SimState::at_rest(r0.position, p.rotor_count());
    s.attitude = rotation_from_euler(&Vector3::new(0.0, 0.0, r0.yaw));
    s.velocity = s.attitude.transpose() * r0.velocity;
    s.rotor_speeds = p.spins.iter().map(|c| -c * p.hover_speed()).collect();
    s
}

/// Seed of an independent stream derived from the run seed.
fn substream(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let p = &config.vehicle;
        let fault = config.fault.state(p)?;
        let state = initial_state(config, &config.trajectory);
        let mut motors = MotorBank::new(p);
        motors.command_speeds(&state.rotor_speeds);
        let fs = 1.0 / config.control_period();
        let hover = DVector::from_element(p.rotor_count(), p.hover_lift());
        Ok(Self {
            fault_applied: false,
            airframe: Airframe::healthy(p),
            fault,
            state,
            motors,
            imu: Imu::new(config.imu.clone(), substream(config.seed, 1))?,
            controller: Controller::new(p, config.gains.clone(), config.control_period())?,
            allocator: Allocator::new(p, config.allocation.clone(), hover)?,
            fdi: FdiEngine::new(config.fdi.clone(), p.rotor_count(), fs, p.lift_coeff, p.max_speed)?,
            disturbance: Disturbance::new(&config.disturbance, substream(config.seed, 2))?,
            config: config.clone(),
            step: 0,
            cycle: 0,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.physics_dt
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Number of control cycles in the configured duration.
    pub fn total_cycles(&self) -> u64 {
        (self.config.duration / self.config.control_period() + 1e-9).floor() as u64
    }

    pub fn is_finished(&self) -> bool {
        self.cycle >= self.total_cycles()
    }

    pub fn state(&self) -> &SimState<f64> {
        &self.state
    }

    pub fn airframe(&self) -> &Airframe<f64> {
        &self.airframe
    }

    pub fn fdi(&self) -> &FdiEngine {
        &self.fdi
    }

    pub fn fdi_mut(&mut self) -> &mut FdiEngine {
        &mut self.fdi
    }

    pub fn motors(&self) -> &MotorBank<f64> {
        &self.motors
    }

    fn apply_fault(&mut self, t: f64) {
        if !self.fault_applied && t >= self.fault.onset_time && !self.fault.is_healthy(&self.config.vehicle) {
            self.airframe = Airframe::new(&self.config.vehicle, &self.fault);
            self.fault_applied = true;
        }
    }

    fn rotor_phases(&self) -> Vec<RotorPhase<f64>> {
        if self.config.imu.harmonics.is_empty() {
            return Vec::new();
        }
        let a = &self.airframe;
        (0..a.rotor_count())
            .map(|i| RotorPhase {
                angle: self.state.blade_angles[i],
                amplitude: (a.prop_masses[i] * a.weights[i].offset * self.state.rotor_speeds[i].powi(2) / a.mass).abs(),
            })
            .collect()
    }

    /// Sensing, FDI, control and allocation at the current instant, followed by one control
    /// period of physics.
    pub fn step_cycle(&mut self) -> Result<CycleRecord> {
        let t = self.time();
        self.apply_fault(t);
        let external = self.disturbance.body_wrench(t, &self.state.attitude);
        let accels = self.motors.derivative(&self.state.rotor_speeds);
        let eval = evaluate(&self.airframe, &self.state, &accels, &external)?;
        let accel = eval.derivative.velocity;
        let vib_accel = -eval.vibration.total() / self.airframe.mass;
        let phases = self.rotor_phases();
        let meas = self.imu.measure(&self.state, &accel, &vib_accel, &phases);

        self.fdi.observe(&meas.accel);
        let residuals = self.fdi.residuals();
        let pin = self.fdi.decide(t);
        let phase = self.fdi.state().phase;

        let reference = self.config.trajectory.reference(t);
        let (demand, cmd) = self.controller.update(&meas, &reference, t);
        let alloc = self.allocator.allocate(&demand.tau, pin.as_ref());
        self.motors.command_lifts(alloc.lifts.as_slice())?;

        let record = CycleRecord {
            cycle: self.cycle,
            time: t,
            state: self.state.clone(),
            reference,
            measurement: meas,
            truth: Truth {
                accel,
                angular_accel: eval.derivative.angular_velocity,
                vibration: eval.vibration,
            },
            residuals,
            phase,
            pin,
            demand: demand.tau,
            lifts: alloc.lifts,
            slack: alloc.slack,
            allocation_fallback: alloc.fallback,
            thrust_clamped: cmd.thrust_clamped,
        };

        self.advance(vib_accel)?;
        self.cycle += 1;
        Ok(record)
    }

    fn advance(&mut self, first_vib: Vector3<f64>) -> Result<()> {
        let h = self.config.physics_dt;
        let track = self.config.imu.low_pass.is_some();
        for k in 0..self.config.control_divider {
            let t = self.time();
            self.apply_fault(t);
            let external = self.disturbance.body_wrench(t, &self.state.attitude);
            if track {
                let vib = if k == 0 {
                    first_vib
                } else {
                    let accels = self.motors.derivative(&self.state.rotor_speeds);
                    -evaluate(&self.airframe, &self.state, &accels, &external)?.vibration.total() / self.airframe.mass
                };
                self.imu.track(&vib, h);
            }
            self.state = rk4_step(&self.airframe, &self.state, &self.motors, &external, h)?;
            self.step += 1;
            if !(self.state.position.norm() <= DIVERGENCE_RADIUS) {
                return Err(Error::SimDiverged(format!("left the {DIVERGENCE_RADIUS} m ball at t = {} s", self.time())));
            }
        }
        Ok(())
    }

    /// Runs until the configured duration, passing each record to `sink`.
    pub fn run_with(&mut self, mut sink: impl FnMut(&CycleRecord)) -> Result<()> {
        while !self.is_finished() {
            let rec = self.step_cycle()?;
            sink(&rec);
        }
        Ok(())
    }
}

/// Roll, pitch, yaw of a record's true attitude.
pub fn attitude_angles(record: &CycleRecord) -> Vector3<f64> {
    euler_zyx(&record.state.attitude)
}
