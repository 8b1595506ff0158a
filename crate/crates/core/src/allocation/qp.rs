use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::real::Real;

/// `min 1/2 x^T H x + f^T x` subject to `A x <= b` and `lower <= x <= upper`.
///
/// `H` must be symmetric positive definite. Infinite bounds are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem<T: Real> {
    pub h: DMatrix<T>,
    pub f: DVector<T>,
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    pub lower: DVector<T>,
    pub upper: DVector<T>,
}

impl<T: Real> QpProblem<T> {
    pub fn dim(&self) -> usize {
        self.f.len()
    }

    /// General rows plus one upper and one lower bound row per variable.
    ///
    /// Constraint `i < m` is row `i` of `A`; `m + k` is `x_k <= upper_k`; `m + n + k` is
    /// `-x_k <= -lower_k`.
    pub fn constraint_count(&self) -> usize {
        self.a.nrows() + 2 * self.dim()
    }

    pub fn objective(&self, x: &DVector<T>) -> T {
        (x.dot(&(&self.h * x)) * T::lit(0.5)) + self.f.dot(x)
    }

    /// Normal and right-hand side of constraint `i`, or `None` for an infinite bound.
    pub fn constraint(&self, i: usize) -> Option<(DVector<T>, T)> {
        let (m, n) = (self.a.nrows(), self.dim());
        if i < m {
            return Some((self.a.row(i).transpose(), self.b[i]));
        }
        let (k, upper) = if i < m + n { (i - m, true) } else { (i - m - n, false) };
        let mut a = DVector::zeros(n);
        if upper {
            if !self.upper[k].is_finite_value() {
                return None;
            }
            a[k] = T::one();
            Some((a, self.upper[k]))
        } else {
            if !self.lower[k].is_finite_value() {
                return None;
            }
            a[k] = -T::one();
            Some((a, -self.lower[k]))
        }
    }

    /// Largest constraint violation at `x` (zero when feasible).
    pub fn infeasibility(&self, x: &DVector<T>) -> T {
        (0..self.constraint_count())
            .filter_map(|i| self.constraint(i))
            .fold(T::zero(), |acc, (a, b)| acc.max(a.dot(x) - b))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.h.shape() != (n, n) || self.a.ncols() != n || self.a.nrows() != self.b.len() {
            return Err(Error::InvalidParams("qp dimensions do not match".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::InvalidParams("qp bound dimensions do not match".into()));
        }
        if self.lower.iter().zip(self.upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InvalidParams("qp lower bound above upper bound".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    pub max_iterations: usize,
    /// Step and multiplier tolerance.
    pub tolerance: f64,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution<T: Real> {
    pub x: DVector<T>,
    /// One multiplier per constraint, zero outside the working set.
    pub multipliers: DVector<T>,
    pub working_set: Vec<usize>,
    pub iterations: usize,
    pub status: QpStatus,
    pub objective: T,
}

/// Largest violation of each first-order optimality condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual<T> {
    pub stationarity: T,
    pub primal: T,
    pub dual: T,
    pub complementarity: T,
}

impl<T: Real> KktResidual<T> {
    pub fn max(&self) -> T {
        self.stationarity.max(self.primal).max(self.dual).max(self.complementarity)
    }
}

pub fn kkt_residual<T: Real>(qp: &QpProblem<T>, x: &DVector<T>, multipliers: &DVector<T>) -> KktResidual<T> {
    let mut grad = &qp.h * x + &qp.f;
    let mut primal = T::zero();
    let mut dual = T::zero();
    let mut comp = T::zero();
    for i in 0..qp.constraint_count() {
        let l = multipliers[i];
        dual = dual.max(-l);
        if let Some((a, b)) = qp.constraint(i) {
            let slack = a.dot(x) - b;
            primal = primal.max(slack);
            comp = comp.max((l * slack).abs());
            grad.axpy(l, &a, T::one());
        }
    }
    KktResidual {
        stationarity: grad.amax(),
        primal,
        dual,
        complementarity: comp,
    }
}

/// Working-set bookkeeping: transformed normals `L_H^{-1} a_i` and the Cholesky factor of
/// their Gram matrix.
struct WorkingSet<T: Real> {
    members: Vec<usize>,
    normals: Vec<DVector<T>>,
    gram: Option<Cholesky<T, Dyn>>,
}

impl<T: Real> WorkingSet<T> {
    fn new() -> Self {
        Self {
            members: Vec::new(),
            normals: Vec::new(),
            gram: None,
        }
    }

    /// Adds constraint `i` unless its normal is (numerically) in the span of the current
    /// members. Returns whether it was added.
    fn try_add(&mut self, i: usize, normal: DVector<T>) -> bool {
        let nn = normal.norm_squared();
        if nn == T::zero() {
            return false;
        }
        let cross = DVector::from_iterator(self.members.len(), self.normals.iter().map(|a| a.dot(&normal)));
        let projected = match &self.gram {
            Some(chol) => {
                let mut y = cross.clone();
                chol.l_dirty().solve_lower_triangular_mut(&mut y);
                y.norm_squared()
            }
            None => T::zero(),
        };
        if nn - projected <= T::lit(1e-10) * nn {
            return false;
        }
        let mut col = DVector::zeros(self.members.len() + 1);
        col.rows_mut(0, self.members.len()).copy_from(&cross);
        col[self.members.len()] = nn;
        self.gram = Some(match &self.gram {
            Some(chol) => chol.insert_column(self.members.len(), col),
            None => Cholesky::new(DMatrix::from_element(1, 1, nn)).expect("positive pivot"),
        });
        self.members.push(i);
        self.normals.push(normal);
        true
    }

    fn remove(&mut self, pos: usize) {
        self.members.remove(pos);
        self.normals.remove(pos);
        self.gram = if self.members.is_empty() {
            None
        } else {
            self.gram.as_ref().map(|c| c.remove_column(pos))
        };
    }

    /// Multipliers of the equality-constrained step from `g~ = L_H^{-1} g`.
    fn multipliers(&self, g: &DVector<T>) -> DVector<T> {
        let mut rhs = DVector::from_iterator(self.members.len(), self.normals.iter().map(|a| -a.dot(g)));
        if let Some(chol) = &self.gram {
            chol.solve_mut(&mut rhs);
        }
        rhs
    }
}

/// Primal active-set method started from a feasible point `x0`.
///
/// Each iteration solves the equality-constrained subproblem on the working set through
/// the Schur complement `A_W H^{-1} A_W^T`, whose Cholesky factor is updated when a
/// constraint enters or leaves. `warm_start` lists constraints to try first; those not
/// tight at `x0` are dropped.
pub fn solve_qp<T: Real>(
    qp: &QpProblem<T>,
    x0: &DVector<T>,
    warm_start: &[usize],
    settings: &QpSettings,
) -> Result<QpSolution<T>> {
    qp.validate()?;
    let tol = T::lit(settings.tolerance);
    let feas_tol = T::lit(1e-9);
    if qp.infeasibility(x0) > feas_tol {
        return Err(Error::InvalidParams(format!(
            "qp start point infeasible by {}",
            qp.infeasibility(x0).as_f64()
        )));
    }
    let lh = Cholesky::new(qp.h.clone()).ok_or_else(|| Error::InvalidParams("qp Hessian is not positive definite".into()))?;
    let l = lh.l();
    let to_whitened = |v: &DVector<T>| {
        let mut w = v.clone();
        l.solve_lower_triangular_mut(&mut w);
        w
    };

    let count = qp.constraint_count();
    let constraints: Vec<Option<(DVector<T>, T)>> = (0..count).map(|i| qp.constraint(i)).collect();
    let whitened: Vec<Option<DVector<T>>> = constraints.iter().map(|c| c.as_ref().map(|(a, _)| to_whitened(a))).collect();

    let mut x = x0.clone();
    let mut ws = WorkingSet::new();
    let mut skipped: Vec<usize> = Vec::new();
    let tight = |i: usize, x: &DVector<T>| match &constraints[i] {
        Some((a, b)) => (a.dot(x) - *b).abs() <= feas_tol * (T::one() + b.abs()),
        None => false,
    };
    for &i in warm_start {
        if i < count && !ws.members.contains(&i) && tight(i, &x) {
            ws.try_add(i, whitened[i].clone().expect("finite constraint"));
        }
    }

    for iteration in 0..settings.max_iterations {
        let g = &qp.h * &x + &qp.f;
        let gt = to_whitened(&g);
        let lambda = ws.multipliers(&gt);
        let mut z = gt.clone();
        for (a, lm) in ws.normals.iter().zip(lambda.iter()) {
            z.axpy(*lm, a, T::one());
        }
        l.ad_solve_lower_triangular_mut(&mut z);
        let p = -z;

        let scale = T::one() + x.amax();
        if p.amax() <= tol * scale {
            let worst = lambda
                .iter()
                .enumerate()
                .fold(None, |best: Option<(usize, T)>, (k, v)| match best {
                    Some((_, bv)) if bv <= *v => best,
                    _ => Some((k, *v)),
                });
            match worst {
                Some((k, v)) if v < -tol * (T::one() + g.amax()) => {
                    ws.remove(k);
                    continue;
                }
                _ => {
                    let mut multipliers = DVector::zeros(count);
                    for (i, lm) in ws.members.iter().zip(lambda.iter()) {
                        multipliers[*i] = *lm;
                    }
                    return Ok(QpSolution {
                        objective: qp.objective(&x),
                        x,
                        multipliers,
                        working_set: ws.members,
                        iterations: iteration + 1,
                        status: QpStatus::Optimal,
                    });
                }
            }
        }

        // ratio test over constraints outside the working set
        let p_norm = p.norm();
        let mut alpha = T::one();
        let mut blocking = None;
        for (i, c) in constraints.iter().enumerate() {
            let Some((a, b)) = c else { continue };
            if ws.members.contains(&i) || skipped.contains(&i) {
                continue;
            }
            let ap = a.dot(&p);
            if ap <= T::lit(1e-11) * a.norm() * p_norm {
                continue;
            }
            let step = ((*b - a.dot(&x)) / ap).max(T::zero());
            if step < alpha {
                alpha = step;
                blocking = Some(i);
            }
        }
        x.axpy(alpha, &p, T::one());
        if alpha > T::zero() {
            skipped.clear();
        }
        if let Some(i) = blocking {
            if !ws.try_add(i, whitened[i].clone().expect("finite constraint")) {
                // dependent on the working set: p only grazes it, keep it out of the next ratio test
                skipped.push(i);
            }
        }
    }
    Err(Error::MaxIterations(settings.max_iterations))
}
