use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use timealloc::assembly::trajectory;
use timealloc::bilevel::Problem;
use timealloc::{ParametricQp, QpSolution, TimeAllocation};

use crate::commands::Failure;

/// Trajectory written by `plan` and `refine`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOutput {
    pub segments: usize,
    pub degree: usize,
    pub dim: usize,
    pub durations: Vec<f64>,
    pub total_time: f64,
    /// Jerk cost `½xᵀPx + qᵀx + c` of the returned coefficients.
    pub objective: f64,
    /// `[segment][control point][axis]` in world coordinates.
    pub control_points: Vec<Vec<Vec<f64>>>,
}

impl TrajectoryOutput {
    pub fn new(problem: &Problem, y: &TimeAllocation, qp: &ParametricQp, sol: &QpSolution) -> Result<Self, Failure> {
        let spline = trajectory(&problem.corridor, y, problem.degree, &sol.x)
            .map_err(|e| Failure::numerical(format!("building the spline: {e}")))?;
        let control_points = spline
            .segments()
            .iter()
            .map(|s| s.ctrl().row_iter().map(|r| r.iter().copied().collect()).collect())
            .collect();
        Ok(Self {
            segments: spline.segments().len(),
            degree: spline.degree(),
            dim: spline.dim(),
            durations: y.as_slice().to_vec(),
            total_time: y.total(),
            objective: qp.objective(&sol.x),
            control_points,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trajectory serializes");
        s.push('\n');
        s
    }
}

/// Write to `path`, or stdout when `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
