use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::gradient::{analytic_gradient, fd_gradient, FdMode};
use super::line_search::{line_search, LineSearchParams, LineSearchState};
use super::project::project_gradient;
use super::{Clock, Evaluator, Problem};
use crate::assembly::{ParametricQp, TimeAllocation};
use crate::error::RefineError;
use crate::qp::{QpSettings, QpSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMethod {
    /// Analytic gradient from the Lagrange multipliers.
    Lm,
    /// Forward finite differences.
    Fd,
}

impl fmt::Display for GradientMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GradientMethod::Lm => "lm",
            GradientMethod::Fd => "fd",
        })
    }
}

impl FromStr for GradientMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lm" => Ok(GradientMethod::Lm),
            "fd" => Ok(GradientMethod::Fd),
            other => Err(format!("unknown gradient method '{other}' (expected lm or fd)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineConfig {
    pub max_iterations: usize,
    pub ls_max_iterations: usize,
    pub alpha0_init: f64,
    /// Growth of the initial step after a first-trial success (`> 1`).
    pub tau_g: f64,
    /// Backtracking factor (`0 < τ_s < 1`).
    pub tau_s: f64,
    pub armijo_c1: f64,
    /// Stop when the projected gradient norm falls below this.
    pub grad_tol: f64,
    /// Stop when the relative objective change of an accepted step is below this.
    pub obj_tol: f64,
    /// Wall-clock budget in milliseconds, checked between iterations.
    pub cutoff_ms: Option<f64>,
    /// Finite-difference step for [`GradientMethod::Fd`].
    pub fd_step: f64,
    pub clock: Clock,
    pub qp: QpSettings,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            ls_max_iterations: 10,
            alpha0_init: 0.1,
            tau_g: 2.0,
            tau_s: 0.5,
            armijo_c1: 1e-4,
            grad_tol: 1e-6,
            obj_tol: 1e-8,
            cutoff_ms: None,
            fd_step: 1e-6,
            clock: Clock::Wall,
            qp: QpSettings::default(),
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<(), RefineError> {
        if !(self.tau_g > 1.0) {
            return Err(RefineError::Config(format!("tau_g must exceed 1, got {}", self.tau_g)));
        }
        if !(self.tau_s > 0.0 && self.tau_s < 1.0) {
            return Err(RefineError::Config(format!("tau_s must lie in (0, 1), got {}", self.tau_s)));
        }
        if !(self.alpha0_init > 0.0) {
            return Err(RefineError::Config("alpha0_init must be positive".into()));
        }
        if !(self.fd_step > 0.0) {
            return Err(RefineError::Config("fd_step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    GradTol,
    ObjTol,
    NoAlpha,
    MaxIter,
    Cutoff,
}

impl fmt::Display for TerminalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminalReason::GradTol => "grad_tol",
            TerminalReason::ObjTol => "obj_tol",
            TerminalReason::NoAlpha => "no_alpha",
            TerminalReason::MaxIter => "max_iter",
            TerminalReason::Cutoff => "cutoff",
        })
    }
}

/// State after an iteration; record 0 is the starting allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub elapsed_ms: f64,
    pub objective: f64,
    /// Projected gradient norm at this allocation, when it was computed.
    pub grad_norm: Option<f64>,
    /// Step that produced this allocation (0 for the start).
    pub alpha: f64,
    /// Cumulative lower-level solves.
    pub qp_solves: usize,
    /// Solves spent on the gradient in the iteration that produced this record.
    pub gradient_solves: usize,
    /// Solves spent on line-search trials in that iteration.
    pub line_search_solves: usize,
    pub durations: Vec<f64>,
    /// The accepted step changed the QP active set, so the local gradient
    /// model did not hold across it.
    pub active_set_changed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineTrace {
    pub method: GradientMethod,
    pub records: Vec<IterationRecord>,
    pub terminal_reason: TerminalReason,
    /// Every lower-level solve of the run, including a final iteration that
    /// did not produce a record.
    pub total_qp_solves: usize,
}

impl RefineTrace {
    pub fn initial_objective(&self) -> f64 {
        self.records[0].objective
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().expect("trace has a starting record").objective
    }

    pub fn total_solves(&self) -> usize {
        self.total_qp_solves
    }

    /// Last record completed within `cutoff_ms`; the starting record when
    /// none finished in time.
    pub fn at_cutoff(&self, cutoff_ms: f64) -> &IterationRecord {
        self.records[1..].iter().rev().find(|r| r.elapsed_ms <= cutoff_ms).unwrap_or(&self.records[0])
    }
}

#[derive(Debug, Clone)]
pub struct RefineResult {
    pub allocation: TimeAllocation,
    pub trace: RefineTrace,
    pub qp: ParametricQp,
    pub solution: QpSolution,
}

/// Projected steepest descent on `f*(y)` from `y0`.
///
/// Each iteration computes the gradient (multipliers or forward
/// differences), projects it onto the feasible directions, and runs the
/// adaptive line search. A step whose objective change is below `obj_tol` is
/// not committed. QPs are warm-started from the current solution.
pub fn refine_time(
    problem: &Problem,
    y0: &TimeAllocation,
    cfg: &RefineConfig,
    method: GradientMethod,
) -> Result<RefineResult, RefineError> {
    cfg.validate()?;
    problem.timing.check(y0)?;
    let mut eval = Evaluator::new(cfg.qp.clone(), cfg.clock);
    eval.restart_clock();

    let (mut qp, mut sol) = eval.evaluate(problem, y0, None)?;
    if !sol.is_optimal() {
        return Err(RefineError::InitialQp(sol.status));
    }
    let mut y = y0.clone();
    let mut records = vec![IterationRecord {
        iter: 0,
        elapsed_ms: eval.elapsed_ms(),
        objective: sol.objective,
        grad_norm: None,
        alpha: 0.0,
        qp_solves: eval.solves(),
        gradient_solves: 0,
        line_search_solves: 0,
        durations: y.as_slice().to_vec(),
        active_set_changed: false,
    }];
    let params =
        LineSearchParams { max_trials: cfg.ls_max_iterations, grow: cfg.tau_g, shrink: cfg.tau_s, c1: cfg.armijo_c1 };
    let mut state = LineSearchState { alpha0: cfg.alpha0_init };
    let mut reason = TerminalReason::MaxIter;

    for iter in 0..cfg.max_iterations {
        if cfg.cutoff_ms.is_some_and(|c| eval.elapsed_ms() >= c) {
            reason = TerminalReason::Cutoff;
            break;
        }
        let before_gradient = eval.solves();
        let g: DVector<f64> = match method {
            GradientMethod::Lm => analytic_gradient(&qp, &sol)?,
            GradientMethod::Fd => fd_gradient(problem, &y, cfg.fd_step, FdMode::Forward, &mut eval)?.gradient,
        };
        let proj = project_gradient(&g, &problem.timing, &y);
        records.last_mut().expect("records").grad_norm = Some(proj.norm);
        if proj.norm < cfg.grad_tol {
            reason = TerminalReason::GradTol;
            break;
        }
        let before_search = eval.solves();
        let found =
            line_search(problem, &y, &proj.direction, sol.objective, &g, &params, &mut state, &mut eval, Some(&sol))?;
        let Some(step) = found else {
            reason = TerminalReason::NoAlpha;
            break;
        };
        if (sol.objective - step.objective).abs() <= cfg.obj_tol * sol.objective.abs().max(f64::MIN_POSITIVE) {
            reason = TerminalReason::ObjTol;
            break;
        }
        let changed = step.solution.active_set != sol.active_set;
        y = step.allocation;
        qp = step.qp;
        sol = step.solution;
        records.push(IterationRecord {
            iter: iter + 1,
            elapsed_ms: eval.elapsed_ms(),
            objective: sol.objective,
            grad_norm: None,
            alpha: step.alpha,
            qp_solves: eval.solves(),
            gradient_solves: before_search - before_gradient,
            line_search_solves: eval.solves() - before_search,
            durations: y.as_slice().to_vec(),
            active_set_changed: changed,
        });
    }

    let trace = RefineTrace { method, records, terminal_reason: reason, total_qp_solves: eval.solves() };
    Ok(RefineResult { allocation: y, trace, qp, solution: sol })
}
