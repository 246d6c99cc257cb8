use nalgebra::DVector;

use super::{Evaluator, Problem};
use crate::assembly::{ParametricQp, TimeAllocation};
use crate::error::AssemblyError;
use crate::qp::QpSolution;

/// Initial step length carried from one search to the next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchState {
    pub alpha0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchParams {
    pub max_trials: usize,
    pub grow: f64,
    pub shrink: f64,
    pub c1: f64,
}

/// An accepted trial point.
#[derive(Debug, Clone)]
pub struct Accepted<T> {
    pub alpha: f64,
    pub objective: f64,
    pub point: Vec<f64>,
    pub payload: T,
    /// Zero-based index of the accepted trial.
    pub trial: usize,
}

/// Adaptive backtracking with the Armijo test `J(α) ≤ J₀ + c₁ α gᵀp`.
///
/// `restore` maps a raw trial point back into the feasible set; `eval`
/// returns the objective there, or `None` when it cannot be evaluated (which
/// counts as insufficient decrease). On success `state.alpha0` grows by
/// `params.grow` if the first trial passed, otherwise it becomes the
/// accepted step.
#[allow(clippy::too_many_arguments)]
pub fn backtrack<T, E>(
    y0: &[f64],
    p: &DVector<f64>,
    j0: f64,
    g: &DVector<f64>,
    params: &LineSearchParams,
    state: &mut LineSearchState,
    restore: impl Fn(&[f64]) -> Vec<f64>,
    mut eval: impl FnMut(&[f64]) -> Result<Option<(f64, T)>, E>,
) -> Result<Option<Accepted<T>>, E> {
    let slope = g.dot(p);
    let mut alpha = state.alpha0;
    for trial in 0..params.max_trials {
        let raw: Vec<f64> = y0.iter().zip(p.iter()).map(|(y, d)| y + alpha * d).collect();
        let point = restore(&raw);
        if let Some((objective, payload)) = eval(&point)? {
            if objective <= j0 + params.c1 * alpha * slope {
                state.alpha0 = if trial == 0 { params.grow * alpha } else { alpha };
                return Ok(Some(Accepted { alpha, objective, point, payload, trial }));
            }
        }
        alpha *= params.shrink;
    }
    Ok(None)
}

#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub objective: f64,
    pub allocation: TimeAllocation,
    pub qp: ParametricQp,
    pub solution: QpSolution,
    pub trial: usize,
}

/// [`backtrack`] over the lower-level optimal value of `problem`.
#[allow(clippy::too_many_arguments)]
pub fn line_search(
    problem: &Problem,
    y0: &TimeAllocation,
    p: &DVector<f64>,
    j0: f64,
    g: &DVector<f64>,
    params: &LineSearchParams,
    state: &mut LineSearchState,
    evaluator: &mut Evaluator,
    warm: Option<&QpSolution>,
) -> Result<Option<LineSearchResult>, AssemblyError> {
    let accepted = backtrack(
        y0.as_slice(),
        p,
        j0,
        g,
        params,
        state,
        |raw| problem.timing.restore(raw),
        |point| {
            let y = TimeAllocation::new(point.to_vec())?;
            let (qp, sol) = evaluator.evaluate(problem, &y, warm)?;
            Ok::<_, AssemblyError>(sol.is_optimal().then(|| (sol.objective, (y, qp, sol))))
        },
    )?;
    Ok(accepted.map(|a| {
        let (allocation, qp, solution) = a.payload;
        LineSearchResult { alpha: a.alpha, objective: a.objective, allocation, qp, solution, trial: a.trial }
    }))
}
