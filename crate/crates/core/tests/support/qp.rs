//! Random allocation QPs and an independent dual bound, shared by the solver tests and the
//! acceptance report.
#![allow(dead_code)]

use bladefdi::allocation::{build_qp, effectiveness_matrix, feasible_start, kkt_residual, solve_qp, AllocationConfig, PinDirective, QpProblem, QpSettings};
use bladefdi::model::VehicleParams;
use nalgebra::{DMatrix, DVector, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Accelerated projected gradient ascent on the dual `max_{l >= 0} q(l)`.
///
/// Every iterate gives a lower bound on the primal optimum, so the returned value
/// certifies the solver objective from below. Iteration stops once the bound is within
/// `target` of `upper` or the budget runs out.
pub fn dual_bound(qp: &QpProblem<f64>, upper: f64, target: f64) -> f64 {
    let n = qp.dim();
    let rows: Vec<(DVector<f64>, f64)> = (0..qp.constraint_count()).filter_map(|i| qp.constraint(i)).collect();
    let m = rows.len();
    let mut g = DMatrix::zeros(m, n);
    let mut c = DVector::zeros(m);
    for (k, (a, b)) in rows.iter().enumerate() {
        g.set_row(k, &a.transpose());
        c[k] = *b;
    }
    let hinv = qp.h.clone().cholesky().unwrap().inverse();
    // q(l) = -1/2 (f + G^T l)^T H^-1 (f + G^T l) - c^T l
    let q_mat = &g * &hinv * g.transpose();
    let lin = &g * &hinv * &qp.f + &c;
    let q0 = -0.5 * qp.f.dot(&(&hinv * &qp.f));
    let value = |l: &DVector<f64>| q0 - 0.5 * l.dot(&(&q_mat * l)) - lin.dot(l);
    let step = 1.0 / q_mat.symmetric_eigenvalues().max().max(1e-12);
    let mut l = DVector::zeros(m);
    let mut y = l.clone();
    let mut t = 1.0f64;
    let mut best = value(&l);
    for _ in 0..400_000 {
        let grad = -(&q_mat * &y) - &lin;
        let next = (&y + grad * step).map(|v: f64| v.max(0.0));
        let v = value(&next);
        if v < value(&l) {
            // adaptive restart
            t = 1.0;
            y = l.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &next + (&next - &l) * ((t - 1.0) / t_next);
        l = next;
        t = t_next;
        best = best.max(v);
        if upper - best < target {
            break;
        }
    }
    best
}

fn unpinned_h(qp: &QpProblem<f64>, j: usize) -> DMatrix<f64> {
    let mut h = qp.h.clone();
    h[(j, j)] = 2.0;
    h
}

fn unpinned_f(qp: &QpProblem<f64>, j: usize) -> DVector<f64> {
    let mut f = qp.f.clone();
    f[j] = 0.0;
    f
}

pub struct Instance {
    pub qp: QpProblem<f64>,
    pub x0: DVector<f64>,
    pub pin: Option<PinDirective<f64>>,
    pub feasible_pin: bool,
    pub max_lift: f64,
}

pub fn instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = [4usize, 6, 8][rng.random_range(0..3)];
    let mut p = VehicleParams::<f64>::multirotor(n, rng.random_range(0.15..0.4));
    p.frame_mass = rng.random_range(1.0..3.0);
    let b = effectiveness_matrix(&p);
    let scale = if rng.random_bool(0.3) { 3.0 } else { 1.0 };
    let tau = Vector6::new(
        0.0,
        0.0,
        -p.hover_lift() * n as f64 * rng.random_range(0.8..1.2) * scale,
        rng.random_range(-0.3..0.3) * scale,
        rng.random_range(-0.3..0.3) * scale,
        rng.random_range(-0.015..0.015) * scale,
    );
    let u_prev = DVector::from_fn(n, |_, _| (p.hover_lift() + rng.random_range(-1.0..1.0)).clamp(0.0, p.max_lift));
    let config = AllocationConfig {
        rate_limit: rng.random_range(0.2..5.0),
        ..AllocationConfig::default()
    };
    let pin = rng.random_bool(0.5).then(|| PinDirective {
        motor: rng.random_range(0..n),
        lift: rng.random_range(0.0..p.max_lift),
    });
    let qp = build_qp(&tau, &u_prev, &b, p.max_lift, &config, pin.as_ref());
    let x0 = feasible_start(&qp, &u_prev, &b, &tau);
    let feasible_pin = pin.is_some_and(|pin| qp.lower[pin.motor] <= pin.lift && pin.lift <= qp.upper[pin.motor]);
    Instance { qp, x0, pin, feasible_pin, max_lift: p.max_lift }
}

/// Worst-case figures over a batch of random instances.
#[derive(Debug, Default)]
pub struct Survey {
    pub instances: usize,
    pub max_kkt: f64,
    pub max_infeasibility: f64,
    pub min_slack: f64,
    /// Largest `(J - bound) / max(|J|, 1)`.
    pub max_gap: f64,
    pub relaxed: usize,
    pub pinned: usize,
    /// Largest `|u_j - u_des| / u_max` over feasible pins.
    pub max_pin_error: f64,
    /// Feasible pins that ended farther from the penalty centre than the unpinned solution.
    pub pin_regressions: usize,
}

pub fn survey(count: usize, seed: u64) -> Survey {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let settings = QpSettings::default();
    let mut s = Survey { min_slack: f64::INFINITY, ..Survey::default() };
    for _ in 0..count {
        let inst = instance(&mut rng);
        let sol = solve_qp(&inst.qp, &inst.x0, &[], &settings).unwrap();
        let n = inst.qp.dim();
        s.instances += 1;
        s.min_slack = s.min_slack.min(sol.x[n - 1]);
        s.max_infeasibility = s.max_infeasibility.max(inst.qp.infeasibility(&sol.x));
        s.max_kkt = s.max_kkt.max(kkt_residual(&inst.qp, &sol.x, &sol.multipliers).max());
        let j = inst.qp.objective(&sol.x);
        let scale = j.abs().max(1.0);
        let bound = dual_bound(&inst.qp, j, 1e-9 * scale);
        s.max_gap = s.max_gap.max((j - bound) / scale);
        if sol.x[n - 1] > 1e-6 {
            s.relaxed += 1;
        }
        if let (Some(pin), true) = (inst.pin, inst.feasible_pin) {
            s.pinned += 1;
            s.max_pin_error = s.max_pin_error.max((sol.x[pin.motor] - pin.lift).abs() / inst.max_lift);
            // The pin swaps u_j^2 for kappa/2 u_j^2 - kappa u_des u_j, a convex penalty centred on
            // c = kappa u_des / (kappa - 2), so the pinned rotor ends no farther from c.
            let kappa = inst.qp.h[(pin.motor, pin.motor)];
            let c = kappa * pin.lift / (kappa - 2.0);
            let free = QpProblem { h: unpinned_h(&inst.qp, pin.motor), f: unpinned_f(&inst.qp, pin.motor), ..inst.qp.clone() };
            let reference = solve_qp(&free, &inst.x0, &[], &settings).unwrap();
            if (sol.x[pin.motor] - c).abs() > (reference.x[pin.motor] - c).abs() + 1e-9 {
                s.pin_regressions += 1;
            }
        }
    }
    s
}
