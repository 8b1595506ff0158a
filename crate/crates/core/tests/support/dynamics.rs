//! Measurements behind the whole-model oracles, shared by the integration tests and the
//! acceptance report. Each function returns the numbers; callers decide the tolerance.
#![allow(dead_code)]

use bladefdi::actuation::MotorBank;
use bladefdi::config::RunConfig;
use bladefdi::control::Trajectory;
use bladefdi::disturbance::DisturbanceConfig;
use bladefdi::fdi::{goertzel, modulation_spectrum, spectral_predictor_fas, unbalance_carriers};
use bladefdi::model::{
    actuation_wrench, evaluate, rk4_step, vibration_forces, Airframe, FaultState, Frame, SimState, VehicleParams, Wrench,
};
use bladefdi::sensing::NoiseStd;
use bladefdi::sim::Simulation;
use nalgebra::Vector3;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn free_body() -> VehicleParams<f64> {
    VehicleParams {
        gravity: 0.0,
        linear_friction: 0.0,
        angular_friction: 0.0,
        ..VehicleParams::default()
    }
}

/// Relative drift of linear and angular momentum over a 10 s free tumble at 1 ms steps.
pub fn momentum_drift() -> (f64, f64) {
    let p = free_body();
    // a stopped chipped rotor moves the centre of mass off the body origin
    let mut fault = FaultState::chipped(&p, 2, 0.3, 0.0);
    fault.radii[5][1] = p.blade_radius * 0.6;
    let airframe = Airframe::new(&p, &fault);
    let motors = MotorBank::new(&p);
    let mut s = SimState::at_rest(Vector3::zeros(), p.rotor_count());
    s.blade_angles = (0..8).map(|i| 0.4 * i as f64).collect();
    s.velocity = Vector3::new(1.0, 0.5, -0.2);
    s.angular_velocity = Vector3::new(0.3, -0.2, 0.5);

    let props = airframe.mass_properties(&s.blade_angles);
    assert!(props.com.norm() > 1e-4);
    // the offset terms of tau_a supply the parallel-axis coupling, so I acts about the centre of mass
    let i_c = props.inertia;
    let momentum = |s: &SimState<f64>| s.linear_momentum(props.mass, &props.com);
    let spin = |s: &SimState<f64>| s.angular_momentum(&i_c);
    let (p0, l0) = (momentum(&s), spin(&s));

    let none = Wrench::zero(Frame::Body);
    for _ in 0..10_000 {
        s = rk4_step(&airframe, &s, &motors, &none, 1e-3).unwrap();
    }
    ((momentum(&s) - p0).norm() / p0.norm(), (spin(&s) - l0).norm() / l0.norm())
}

/// Largest `|f_as|` and `|f_aa|` of the healthy vehicle over `count` random states.
pub fn healthy_vibration(count: usize, seed: u64) -> (f64, f64) {
    let a = Airframe::<f64>::healthy(&VehicleParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v3 = |s: f64| Vector3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s));
    let (mut arm, mut unb) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let w = v3(5.0);
        let wd = v3(50.0);
        let th: Vec<f64> = (0..8).map(|i| 0.7 * i as f64 + w.x).collect();
        let sp: Vec<f64> = (0..8).map(|i| 300.0 + 40.0 * i as f64 + 10.0 * wd.y).collect();
        let ac: Vec<f64> = (0..8).map(|i| 500.0 * (i as f64 - 3.5) + wd.z).collect();
        let f = vibration_forces(&a, &w, &wd, &th, &sp, &ac);
        arm = arm.max(f.arm.norm());
        unb = unb.max(f.unbalance.norm());
    }
    (arm, unb)
}

/// Body acceleration amplitude at the rotor pulsation and `|k| m th'^2 / m`, for rotor 2
/// chipped by 10% and spinning alone at 520 rad/s.
pub fn free_hover_peak() -> (f64, f64) {
    let p = free_body();
    let fault = FaultState::chipped(&p, 1, 0.1, 0.0);
    let airframe = Airframe::new(&p, &fault);
    let mut motors = MotorBank::new(&p);
    let speed = -p.spins[1] * 520.0;
    let mut speeds = vec![0.0; 8];
    speeds[1] = speed;
    motors.command_speeds(&speeds);
    let mut s = SimState::at_rest(Vector3::zeros(), 8);
    s.rotor_speeds = speeds.clone();
    let none = Wrench::zero(Frame::Body);

    let accels = motors.derivative(&s.rotor_speeds);
    let mut ax = Vec::new();
    let dt = 1e-4;
    let steps = 12_083; // 1000 revolutions of 520 rad/s, close to a whole number of periods
    for _ in 0..steps {
        let ev = evaluate(&airframe, &s, &accels, &none).unwrap();
        ax.push(ev.derivative.velocity.x);
        s = rk4_step(&airframe, &s, &motors, &none, dt).unwrap();
    }
    let mk = airframe.prop_masses[1] * airframe.weights[1].offset;
    let expected = mk.abs() * 520.0 * 520.0 / airframe.mass;
    let amp = 2.0 * goertzel(&ax, 520.0, 1.0 / dt).norm() / ax.len() as f64;
    (amp, expected)
}

/// Closed-loop hover with rotor 2 chipped by 10%: measured x/y acceleration amplitude at the
/// rotor speed over the last 2 s and the closed form `d k m th'^2 / m`.
pub fn closed_loop_hover_peak(damping: f64) -> (f64, f64) {
    let mut cfg = RunConfig {
        trajectory: Trajectory::hover(),
        duration: 14.0,
        ..RunConfig::default()
    };
    cfg.fault.onset = 2.0;
    cfg.imu.damping = damping;
    cfg.fdi.threshold = f64::INFINITY;
    cfg.disturbance.enabled = false;
    let mut sim = Simulation::new(&cfg).unwrap();
    let mut tail = Vec::new();
    sim.run_with(|r| {
        if r.time >= 12.0 {
            tail.push(r.clone())
        }
    })
    .unwrap();
    let a = sim.airframe();
    let i = cfg.fault.rotor - 1;
    let mean_sq = tail.iter().map(|r| r.state.rotor_speeds[i].powi(2)).sum::<f64>() / tail.len() as f64;
    let expected = damping * a.weights[i].offset.abs() * a.prop_masses[i] * mean_sq / a.mass;
    let speed = mean_sq.sqrt();
    let x: Vec<f64> = tail.iter().map(|r| r.measurement.accel.x).collect();
    let y: Vec<f64> = tail.iter().map(|r| r.measurement.accel.y).collect();
    let n = x.len() as f64;
    let fs = cfg.imu.sample_rate;
    // the rotor speed is not bin-aligned; take the largest of a fine local search
    let measured = (-40..=40)
        .map(|k| speed + k as f64 * 0.05)
        .map(|w| (2.0 * goertzel(&x, w, fs).norm() / n).max(2.0 * goertzel(&y, w, fs).norm() / n))
        .fold(0.0, f64::max);
    (measured, expected)
}

pub struct Flight {
    pub omega: Vec<Vector3<f64>>,
    pub omega_dot: Vec<Vector3<f64>>,
    pub arm: Vec<Vector3<f64>>,
    pub unbalance: Vec<Vector3<f64>>,
    pub speeds: Vec<Vec<f64>>,
    pub accels: Vec<Vec<f64>>,
    pub angles: Vec<Vec<f64>>,
    pub airframe: Airframe<f64>,
}

/// Noise-free chipped helicoid flight, sampled at the control rate over `[t0, t0 + 1)` s.
pub fn chipped_flight(t0: f64) -> Flight {
    let mut cfg = RunConfig::default();
    cfg.trajectory = Trajectory::helicoid();
    cfg.imu.noise = NoiseStd::zero();
    cfg.disturbance = DisturbanceConfig::none();
    cfg.fault.depth = 0.1;
    cfg.fault.onset = 1.0;
    cfg.fdi.threshold = 1e9;
    cfg.duration = t0 + 1.0;
    let mut sim = Simulation::new(&cfg).unwrap();
    let mut f = Flight {
        omega: vec![],
        omega_dot: vec![],
        arm: vec![],
        unbalance: vec![],
        speeds: vec![],
        accels: vec![],
        angles: vec![],
        airframe: sim.airframe().clone(),
    };
    while !sim.is_finished() {
        let accels = sim.motors().derivative(&sim.state().rotor_speeds);
        let r = sim.step_cycle().unwrap();
        if r.time + 1e-9 >= t0 {
            f.airframe = sim.airframe().clone();
            f.omega.push(r.state.angular_velocity);
            f.omega_dot.push(r.truth.angular_accel);
            f.arm.push(r.truth.vibration.arm);
            f.unbalance.push(r.truth.vibration.unbalance);
            f.speeds.push(r.state.rotor_speeds.clone());
            f.accels.push(accels);
            f.angles.push(r.state.blade_angles.clone());
        }
    }
    f
}

pub fn dft(trace: &[Vector3<f64>], nu: f64, fs: f64) -> [Complex<f64>; 3] {
    let mut out = [Complex::default(); 3];
    for (c, o) in out.iter_mut().enumerate() {
        let x: Vec<f64> = trace.iter().map(|v| v[c]).collect();
        *o = goertzel(&x, nu, fs);
    }
    out
}

/// DFT bin pulsations `2 pi k / T` of an `n`-sample window within 300..620 rad/s.
pub fn rotor_band_bins(n: usize, fs: f64) -> Vec<f64> {
    let df = 2.0 * std::f64::consts::PI * fs / n as f64;
    (1..n / 2).map(|k| k as f64 * df).filter(|w| (300.0..620.0).contains(w)).collect()
}

/// Largest relative error over the bins whose magnitude is at least 10% of the peak.
pub fn dominant_error(measured: &[[Complex<f64>; 3]], predicted: &[[Complex<f64>; 3]]) -> (f64, usize) {
    let peak = measured.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    let mut bins = 0;
    for (m, p) in measured.iter().zip(predicted) {
        for c in 0..3 {
            if m[c].norm() >= 0.1 * peak {
                bins += 1;
                worst = worst.max((m[c] - p[c]).norm() / m[c].norm());
            }
        }
    }
    (worst, bins)
}

/// Newton steps on rotors `adjust` until the rotor wrench has no torque about the static
/// centre of mass.
pub fn trim(airframe: &Airframe<f64>, speeds: &mut [f64], adjust: [usize; 3]) {
    let com = airframe.arm_moment / airframe.mass;
    for _ in 0..20 {
        let torque = |s: &[f64]| {
            let w = actuation_wrench(airframe, s);
            w.torque - com.cross(&w.force)
        };
        let t0 = torque(speeds);
        let mut jac = nalgebra::Matrix3::zeros();
        for (c, &i) in adjust.iter().enumerate() {
            let mut ds = speeds.to_vec();
            ds[i] += 1e-3;
            jac.set_column(c, &((torque(&ds) - t0) / 1e-3));
        }
        let step = jac.lu().solve(&(-t0)).unwrap();
        for (c, &i) in adjust.iter().enumerate() {
            speeds[i] += step[c];
        }
    }
}

/// Spectral predictor of the arm force against the simulated trace.
///
/// Open-loop manoeuvre: a slow tumble of a vehicle whose chipped rotor spins at 81 Hz, a DFT
/// bin of the one-second window, trimmed so the rotors exert no torque about the centre of
/// mass. The rate ripple is then periodic in the window and F[w'] = j nu F[w] holds on every
/// bin up to the edge term of the slow drift. Sampling at the physics rate keeps the
/// twice-per-revolution ripple of the healthy rotors from aliasing into the band.
///
/// Returns the worst relative error on dominant bins, their count, and the worst error on
/// any band bin as a fraction of the peak.
pub fn arm_predictor() -> (f64, usize, f64) {
    let p = free_body();
    let fault = FaultState::chipped(&p, 1, 0.1, 0.0);
    let airframe = Airframe::new(&p, &fault);
    assert!(airframe.arm_moment.norm() > 0.0);
    let fs = 1000.0;
    let n = 1000;
    let hover = VehicleParams::<f64>::default().hover_speed();
    let mut speeds: Vec<f64> = p.spins.iter().map(|c| -c * hover).collect();
    speeds[1] = -p.spins[1] * 2.0 * std::f64::consts::PI * 81.0;
    trim(&airframe, &mut speeds, [3, 5, 7]);
    let mut motors = MotorBank::new(&p);
    motors.command_speeds(&speeds);
    let mut s = SimState::at_rest(Vector3::zeros(), 8);
    s.rotor_speeds = speeds;
    s.angular_velocity = Vector3::new(0.02, -0.01, 0.03);
    let none = Wrench::zero(Frame::Body);

    let (mut omega, mut arm) = (Vec::new(), Vec::new());
    let accels = motors.derivative(&s.rotor_speeds);
    for _ in 0..n {
        omega.push(s.angular_velocity);
        arm.push(evaluate(&airframe, &s, &accels, &none).unwrap().vibration.arm);
        s = rk4_step(&airframe, &s, &motors, &none, 1e-3).unwrap();
    }
    let grid = rotor_band_bins(n, fs);
    let measured: Vec<_> = grid.iter().map(|nu| dft(&arm, *nu, fs)).collect();
    // On a bin e^{-j nu T} = 1, so the window edge adds fs (w_N - w_0) x M to F[w' x M].
    let edge = (s.angular_velocity - omega[0]).cross(&airframe.arm_moment) * fs;
    let predicted: Vec<_> = spectral_predictor_fas(&airframe, &omega, fs, &grid)
        .into_iter()
        .map(|b| [b[0] + edge.x, b[1] + edge.y, b[2] + edge.z])
        .collect();
    let (err, bins) = dominant_error(&measured, &predicted);
    let peak = measured.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let mut weak = 0.0f64;
    for (m, p) in measured.iter().zip(&predicted) {
        for c in 0..3 {
            weak = weak.max((m[c] - p[c]).norm() / peak);
        }
    }
    (err, bins, weak)
}

/// Modulation spectrum of the unbalance force against the closed-loop chipped helicoid.
pub fn unbalance_modulation() -> (f64, usize) {
    let f = chipped_flight(20.0);
    let fs = 200.0;
    let rotor = 1;
    let carriers: Vec<_> = (0..f.omega.len())
        .map(|k| unbalance_carriers(&f.airframe, &f.omega[k], &f.omega_dot[k], &f.speeds[k], &f.accels[k])[rotor])
        .collect();
    let angles: Vec<f64> = f.angles.iter().map(|a| a[rotor]).collect();
    let grid = rotor_band_bins(f.omega.len(), fs);
    let measured: Vec<_> = grid.iter().map(|nu| dft(&f.unbalance, *nu, fs)).collect();
    let predicted = modulation_spectrum(&carriers, &angles, fs, &grid);
    dominant_error(&measured, &predicted)
}
