//! Dense convex QP solving with primal and dual solutions.

mod brute_force;
mod dual_active_set;
mod eliminate;

use nalgebra::DVector;

pub use brute_force::{brute_force, MAX_ORACLE_CONSTRAINTS};
pub use dual_active_set::QpSolver;

use crate::assembly::ParametricQp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSettings {
    /// Primal feasibility target for the returned point.
    pub tol: f64,
    /// Slack/multiplier threshold for reporting a constraint as active.
    pub active_tol: f64,
    /// Diagonal shift added when the reduced Hessian is numerically singular.
    pub regularization: f64,
    /// Iteration cap; `None` scales with the problem size.
    pub max_iter: Option<usize>,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self { tol: 1e-8, active_tol: 1e-7, regularization: 1e-9, max_iter: None }
    }
}

/// Primal/dual solution. Multipliers follow the Lagrangian
/// `f + λᵀ(Gx − h) + μᵀ(Lx − m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub lambda: DVector<f64>,
    pub mu: DVector<f64>,
    /// Inequalities with small slack or a positive multiplier, ascending.
    pub active_set: Vec<usize>,
    /// Inequalities in the solver's final working set, in insertion order.
    /// Passing the solution back as a warm start replays this set.
    pub working_set: Vec<usize>,
    pub status: QpStatus,
    pub iterations: usize,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }

    pub(crate) fn infeasible(n: usize, m_i: usize, m_e: usize, iterations: usize) -> Self {
        Self {
            x: DVector::from_element(n, f64::NAN),
            objective: f64::INFINITY,
            lambda: DVector::zeros(m_i),
            mu: DVector::zeros(m_e),
            active_set: Vec::new(),
            working_set: Vec::new(),
            status: QpStatus::Infeasible,
            iterations,
        }
    }
}

/// Infinity norms of the four KKT residual blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    /// `‖Px + q + Gᵀλ + Lᵀμ‖∞`
    pub stationarity: f64,
    /// `max(‖(Gx − h)₊‖∞, ‖Lx − m‖∞)`
    pub primal: f64,
    /// `‖(−λ)₊‖∞`
    pub dual: f64,
    /// `max_i |λᵢ (Gx − h)ᵢ|`
    pub comp_slack: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.dual).max(self.comp_slack)
    }
}

pub fn kkt_residual(qp: &ParametricQp, sol: &QpSolution) -> KktResidual {
    let x = &sol.x;
    let mut grad = &qp.p * x + &qp.q;
    if qp.num_ineq() > 0 {
        grad += qp.g.tr_mul(&sol.lambda);
    }
    if qp.num_eq() > 0 {
        grad += qp.l.tr_mul(&sol.mu);
    }
    let ineq = &qp.g * x - &qp.h;
    let eq = &qp.l * x - &qp.m;
    let primal_ineq = ineq.iter().fold(0.0f64, |a, &v| a.max(v));
    let primal_eq = eq.amax();
    KktResidual {
        stationarity: grad.amax(),
        primal: primal_ineq.max(primal_eq),
        dual: sol.lambda.iter().fold(0.0f64, |a, &v| a.max(-v)),
        comp_slack: sol.lambda.iter().zip(ineq.iter()).fold(0.0f64, |a, (l, s)| a.max((l * s).abs())),
    }
}

pub(crate) fn report_active_set(qp: &ParametricQp, x: &DVector<f64>, lambda: &DVector<f64>, tol: f64) -> Vec<usize> {
    let slack = &qp.h - &qp.g * x;
    (0..qp.num_ineq()).filter(|&i| slack[i] <= tol || lambda[i] > tol).collect()
}
