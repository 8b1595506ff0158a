//! Wrench-to-lift allocation as a slack-relaxed quadratic program, and the pin directive
//! used during active isolation.

mod qp;

pub use qp::{kkt_residual, solve_qp, KktResidual, QpProblem, QpSettings, QpSolution, QpStatus};

use nalgebra::{DMatrix, DVector, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::VehicleParams;
use crate::real::Real;

/// `B` with column `i` equal to `(0, 0, -1, -l_iy, l_ix, c_wi c_D / c_L)`: the body wrench of
/// one newton of lift on rotor `i`.
pub fn effectiveness_matrix<T: Real>(params: &VehicleParams<T>) -> DMatrix<T> {
    let n = params.rotor_count();
    let ratio = params.drag_coeff / params.lift_coeff;
    let mut b = DMatrix::zeros(6, n);
    for (i, (l, c)) in params.arms.iter().zip(&params.spins).enumerate() {
        b[(2, i)] = -T::one();
        b[(3, i)] = -l.y;
        b[(4, i)] = l.x;
        b[(5, i)] = *c * ratio;
    }
    b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocationConfig {
    /// Quadratic slack weight.
    pub lambda_h: f64,
    /// Linear slack weight.
    pub lambda_f: f64,
    /// Pinned-motor weight, `0 < kappa < lambda_h`.
    pub kappa: f64,
    /// Maximum lift change per allocation call (N).
    pub rate_limit: f64,
    pub max_iterations: usize,
}

impl Default for AllocationConfig {
    fn default() -> Self {
        Self {
            lambda_h: 100.0,
            lambda_f: 100.0,
            kappa: 20.0,
            rate_limit: 0.5,
            max_iterations: 200,
        }
    }
}

impl AllocationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_h > 0.0 && self.lambda_f > 0.0) {
            return Err(Error::InvalidParams("lambda_h and lambda_f must be positive".into()));
        }
        if !(self.kappa > 0.0 && self.kappa < self.lambda_h) {
            return Err(Error::InvalidParams(format!("kappa {} must lie in (0, lambda_h)", self.kappa)));
        }
        if !(self.rate_limit > 0.0) {
            return Err(Error::InvalidParams("rate limit must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParams("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Drives motor `motor` toward lift `lift` through the QP weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PinDirective<T: Real> {
    pub motor: usize,
    pub lift: T,
}

/// Builds the allocation QP over `x = [u; s]`.
///
/// Cost `u^T u + lambda_h s^2 + lambda_f s`, i.e. `H = 2 blkdiag(I, lambda_h)`, `f = [0; lambda_f]`;
/// with a pin, `H_jj = kappa` and `f_j = -kappa u_des`. Rows `-Bu - s <= -tau` and
/// `Bu - s <= tau`; box `max(u_prev - delta, 0) <= u <= min(u_prev + delta, u_max)`, `s >= 0`.
pub fn build_qp<T: Real>(
    tau: &Vector6<T>,
    u_prev: &DVector<T>,
    b: &DMatrix<T>,
    max_lift: T,
    config: &AllocationConfig,
    pin: Option<&PinDirective<T>>,
) -> QpProblem<T> {
    let n = b.ncols();
    let two = T::lit(2.0);
    let mut h = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        h[(i, i)] = two;
    }
    h[(n, n)] = two * T::lit(config.lambda_h);
    let mut f = DVector::zeros(n + 1);
    f[n] = T::lit(config.lambda_f);
    if let Some(pin) = pin {
        let kappa = T::lit(config.kappa);
        h[(pin.motor, pin.motor)] = kappa;
        f[pin.motor] = -kappa * pin.lift;
    }

    let mut a = DMatrix::zeros(12, n + 1);
    let mut rhs = DVector::zeros(12);
    for r in 0..6 {
        for c in 0..n {
            a[(r, c)] = -b[(r, c)];
            a[(r + 6, c)] = b[(r, c)];
        }
        a[(r, n)] = -T::one();
        a[(r + 6, n)] = -T::one();
        rhs[r] = -tau[r];
        rhs[r + 6] = tau[r];
    }

    let delta = T::lit(config.rate_limit);
    let mut lower = DVector::zeros(n + 1);
    let mut upper = DVector::from_element(n + 1, T::infinity());
    for i in 0..n {
        lower[i] = (u_prev[i] - delta).max(T::zero());
        upper[i] = (u_prev[i] + delta).min(max_lift);
    }
    QpProblem {
        h,
        f,
        a,
        b: rhs,
        lower,
        upper,
    }
}

/// Feasible start for [`build_qp`]: `u = u_prev` clamped to the box, `s = |B u - tau|_inf`.
pub fn feasible_start<T: Real>(qp: &QpProblem<T>, u_prev: &DVector<T>, b: &DMatrix<T>, tau: &Vector6<T>) -> DVector<T> {
    let n = b.ncols();
    let mut x = DVector::zeros(n + 1);
    for i in 0..n {
        x[i] = u_prev[i].clamp(qp.lower[i], qp.upper[i]);
    }
    let err = b * x.rows(0, n) - tau;
    x[n] = err.amax();
    x
}

/// Result of one allocation call.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T: Real> {
    pub lifts: DVector<T>,
    pub slack: T,
    pub iterations: usize,
    pub status: QpStatus,
    /// The solver failed and the previous lifts were kept.
    pub fallback: bool,
}

/// Stateful allocator: keeps the previous lifts for the rate limit and the previous working
/// set for warm starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocator<T: Real> {
    effectiveness: DMatrix<T>,
    max_lift: T,
    config: AllocationConfig,
    settings: QpSettings,
    u_prev: DVector<T>,
    working_set: Vec<usize>,
}

impl<T: Real> Allocator<T> {
    pub fn new(params: &VehicleParams<T>, config: AllocationConfig, initial_lifts: DVector<T>) -> Result<Self> {
        config.validate()?;
        if initial_lifts.len() != params.rotor_count() {
            return Err(Error::InvalidParams("initial lift vector has the wrong length".into()));
        }
        let settings = QpSettings {
            max_iterations: config.max_iterations,
            ..QpSettings::default()
        };
        Ok(Self {
            effectiveness: effectiveness_matrix(params),
            max_lift: params.max_lift,
            config,
            settings,
            u_prev: initial_lifts.map(|u| u.clamp(T::zero(), params.max_lift)),
            working_set: Vec::new(),
        })
    }

    pub fn effectiveness(&self) -> &DMatrix<T> {
        &self.effectiveness
    }

    pub fn config(&self) -> &AllocationConfig {
        &self.config
    }

    pub fn previous_lifts(&self) -> &DVector<T> {
        &self.u_prev
    }

    pub fn allocate(&mut self, tau: &Vector6<T>, pin: Option<&PinDirective<T>>) -> Allocation<T> {
        let n = self.effectiveness.ncols();
        let qp = build_qp(tau, &self.u_prev, &self.effectiveness, self.max_lift, &self.config, pin);
        let x0 = feasible_start(&qp, &self.u_prev, &self.effectiveness, tau);
        match solve_qp(&qp, &x0, &self.working_set, &self.settings) {
            Ok(sol) => {
                let lifts = sol.x.rows(0, n).map(|u| u.clamp(T::zero(), self.max_lift));
                self.u_prev = lifts.clone();
                self.working_set = sol.working_set;
                Allocation {
                    lifts,
                    slack: sol.x[n],
                    iterations: sol.iterations,
                    status: QpStatus::Optimal,
                    fallback: false,
                }
            }
            Err(err) => {
                self.working_set.clear();
                let iterations = match err {
                    Error::MaxIterations(k) => k,
                    _ => 0,
                };
                let slack = (&self.effectiveness * &self.u_prev - tau).amax();
                Allocation {
                    lifts: self.u_prev.clone(),
                    slack,
                    iterations,
                    status: QpStatus::MaxIterations,
                    fallback: true,
                }
            }
        }
    }
}
