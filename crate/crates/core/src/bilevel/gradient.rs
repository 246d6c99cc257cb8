use nalgebra::DVector;

use super::{Evaluator, Problem};
use crate::assembly::{ParametricQp, TimeAllocation};
use crate::error::GradientError;
use crate::qp::QpSolution;

/// Gradient of the optimal value `f*(y)` from the QP multipliers:
///
/// `∂f*/∂y_k = λᵀ(∂G_k x − ∂h_k) + μᵀ(∂L_k x − ∂m_k) + ½xᵀ∂P_k x + ∂q_kᵀx + ∂c_k`
///
/// Inactive rows carry `λᵢ = 0`, so summing over every row equals summing
/// over the active set. No extra QP solve is needed.
pub fn analytic_gradient(qp: &ParametricQp, sol: &QpSolution) -> Result<DVector<f64>, GradientError> {
    if !sol.is_optimal() {
        return Err(GradientError::NotOptimal(sol.status));
    }
    let x = &sol.x;
    let rx = qp.cost_factor.as_ref().map(|r| r.mul_vec(x));
    let grad = qp.partials.iter().map(|d| {
        // ½xᵀ∂P x, or (Rx)ᵀ(∂R x) when P = RᵀR is available
        let quad = match &rx {
            Some(rx) => d.dr.bilinear(rx, x),
            None => 0.5 * d.dp.bilinear(x, x),
        };
        d.dg.bilinear(&sol.lambda, x) - d.dh.dot(&sol.lambda) + d.dl.bilinear(&sol.mu, x) - d.dm.dot(&sol.mu)
            + quad
            + d.dq.dot(x)
            + d.dc
    });
    Ok(DVector::from_iterator(qp.partials.len(), grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdMode {
    /// `(f(y + h e_k) − f(y)) / h`, `n + 1` solves.
    Forward,
    /// `(f(y) − f(y − h e_k)) / h`, `n + 1` solves.
    Backward,
    /// `(f(y + h e_k) − f(y − h e_k)) / 2h`, `2n` solves.
    Central,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdGradient {
    pub gradient: DVector<f64>,
    pub solves: usize,
}

/// Finite-difference estimate of `∇f*(y)`.
///
/// Each duration is perturbed on its own. The lower-level QP is defined for
/// any positive durations, so this yields the full gradient even when the
/// outer problem fixes the total time; only the duration floor is enforced.
pub fn fd_gradient(
    problem: &Problem,
    y: &TimeAllocation,
    h: f64,
    mode: FdMode,
    evaluator: &mut Evaluator,
) -> Result<FdGradient, GradientError> {
    let n = y.len();
    let start = evaluator.solves();
    let y_min = problem.timing.y_min();
    let base = match mode {
        FdMode::Central => None,
        FdMode::Forward | FdMode::Backward => {
            let (_, sol) = evaluator.evaluate(problem, y, None)?;
            if !sol.is_optimal() {
                return Err(GradientError::NotOptimal(sol.status));
            }
            Some(sol)
        }
    };
    let mut value_at = |k: usize, step: f64, warm: Option<&QpSolution>| -> Result<f64, GradientError> {
        let mut v = y.as_slice().to_vec();
        v[k] += step;
        if v[k] < y_min {
            return Err(GradientError::Perturbation(k));
        }
        let yk = TimeAllocation::new(v)?;
        let (_, sol) = evaluator.evaluate(problem, &yk, warm)?;
        if !sol.is_optimal() {
            return Err(GradientError::FiniteDifference { index: k, status: sol.status });
        }
        Ok(sol.objective)
    };
    let mut grad = DVector::zeros(n);
    for k in 0..n {
        grad[k] = match mode {
            FdMode::Forward => {
                let b = base.as_ref().expect("base solve");
                (value_at(k, h, Some(b))? - b.objective) / h
            }
            FdMode::Backward => {
                let b = base.as_ref().expect("base solve");
                (b.objective - value_at(k, -h, Some(b))?) / h
            }
            FdMode::Central => (value_at(k, h, None)? - value_at(k, -h, None)?) / (2.0 * h),
        };
    }
    Ok(FdGradient { gradient: grad, solves: evaluator.solves() - start })
}

/// Analytic gradient next to a central difference, per component.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub analytic: DVector<f64>,
    pub finite_difference: DVector<f64>,
    /// `|a − f| / max(|a|, |f|, 1e-3 · ‖a‖∞)`; components far below the
    /// largest one are judged on the scale of the gradient.
    pub rel_error: DVector<f64>,
    /// Both perturbed solves kept the base active set.
    pub stable: Vec<bool>,
    pub solves: usize,
}

impl GradientCheck {
    /// Largest relative error over the active-set-stable components.
    pub fn max_stable_error(&self) -> f64 {
        self.rel_error.iter().zip(&self.stable).filter(|(_, s)| **s).map(|(e, _)| *e).fold(0.0, f64::max)
    }
}

/// Compare [`analytic_gradient`] with a central difference of step `h`.
pub fn gradient_check(
    problem: &Problem,
    y: &TimeAllocation,
    h: f64,
    evaluator: &mut Evaluator,
) -> Result<GradientCheck, GradientError> {
    let n = y.len();
    let start = evaluator.solves();
    let y_min = problem.timing.y_min();
    let (qp, base) = evaluator.evaluate(problem, y, None)?;
    let analytic = analytic_gradient(&qp, &base)?;
    let mut solve_at = |k: usize, step: f64| -> Result<QpSolution, GradientError> {
        let mut v = y.as_slice().to_vec();
        v[k] += step;
        if v[k] < y_min {
            return Err(GradientError::Perturbation(k));
        }
        let (_, sol) = evaluator.evaluate(problem, &TimeAllocation::new(v)?, Some(&base))?;
        if !sol.is_optimal() {
            return Err(GradientError::FiniteDifference { index: k, status: sol.status });
        }
        Ok(sol)
    };
    let mut fd = DVector::zeros(n);
    let mut stable = Vec::with_capacity(n);
    for k in 0..n {
        let plus = solve_at(k, h)?;
        let minus = solve_at(k, -h)?;
        fd[k] = (plus.objective - minus.objective) / (2.0 * h);
        stable.push(plus.active_set == base.active_set && minus.active_set == base.active_set);
    }
    let floor = (1e-3 * analytic.amax()).max(f64::MIN_POSITIVE);
    let rel_error = DVector::from_iterator(
        n,
        analytic.iter().zip(fd.iter()).map(|(a, f)| (a - f).abs() / a.abs().max(f.abs()).max(floor)),
    );
    Ok(GradientCheck { analytic, finite_difference: fd, rel_error, stable, solves: evaluator.solves() - start })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{QpPartials, SparseVec, Triplets};
    use crate::qp::QpSolver;
    use nalgebra::DMatrix;

    use crate::bilevel::toy::{linear_term as toy_linear_term, moving_constraint as toy_moving_constraint};

    #[test]
    fn linear_term_gradient_is_the_optimum() {
        let qp = toy_linear_term(0.0);
        let sol = QpSolver::default().solve(&qp, None);
        let g = analytic_gradient(&qp, &sol).unwrap();
        assert_eq!(g[0], -1.0);
    }

    #[test]
    fn moving_constraint_gradient_comes_from_lambda() {
        let qp = toy_moving_constraint(-1.0);
        let sol = QpSolver::default().solve(&qp, None);
        assert!((sol.lambda[0] - 1.0).abs() < 1e-14);
        let g = analytic_gradient(&qp, &sol).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-14);
        // convex f*: the actual change over a finite step is smaller than predicted
        let later = QpSolver::default().solve(&toy_moving_constraint(-0.5), None);
        let actual = later.objective - sol.objective;
        let predicted = g[0] * 0.5;
        assert!(actual < 0.0 && actual.abs() < predicted.abs());
    }

    #[test]
    fn non_optimal_solution_is_rejected() {
        let qp = toy_linear_term(0.0);
        let mut sol = QpSolver::default().solve(&qp, None);
        sol.status = crate::qp::QpStatus::Infeasible;
        assert!(matches!(analytic_gradient(&qp, &sol), Err(GradientError::NotOptimal(_))));
    }

    #[test]
    fn bilinear_terms_use_every_partial() {
        // two "durations": one moves an equality row, the other scales P and c
        let mut d0 = QpPartials::zeros(2, 0, 1);
        d0.dl = Triplets { nrows: 1, ncols: 2, entries: vec![(0, 0, 2.0)] };
        d0.dm = SparseVec { len: 1, entries: vec![(0, 0.5)] };
        let mut d1 = QpPartials::zeros(2, 0, 1);
        d1.dp = Triplets { nrows: 2, ncols: 2, entries: vec![(1, 1, 4.0)] };
        d1.dc = 3.0;
        let qp = ParametricQp::new(
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            0.0,
            DMatrix::zeros(0, 2),
            DVector::zeros(0),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_element(1, 1.0),
        )
        .with_partials(vec![d0, d1]);
        let sol = QpSolver::default().solve(&qp, None);
        let g = analytic_gradient(&qp, &sol).unwrap();
        // x = (½, ½), μ = −½
        assert!((g[0] - (-0.5 * (2.0 * 0.5 - 0.5))).abs() < 1e-12);
        assert!((g[1] - (0.5 * 4.0 * 0.25 + 3.0)).abs() < 1e-12);
    }
}
