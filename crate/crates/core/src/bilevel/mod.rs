//! Outer optimization over segment durations.

mod gradient;
mod line_search;
mod project;
mod refine;
pub mod toy;

use std::time::Instant;

pub use gradient::{analytic_gradient, fd_gradient, gradient_check, FdGradient, FdMode, GradientCheck};
pub use line_search::{backtrack, line_search, Accepted, LineSearchParams, LineSearchResult, LineSearchState};
pub use project::{project_gradient, ProjectedGradient};
pub use refine::{
    refine_time, GradientMethod, IterationRecord, RefineConfig, RefineResult, RefineTrace, TerminalReason,
};

use crate::assembly::{self, Corridor, ParametricQp, TimeAllocation, TimingConstraints};
use crate::error::AssemblyError;
use crate::qp::{QpSettings, QpSolution, QpSolver};

/// A corridor together with the spline degree and the outer constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub corridor: Corridor,
    pub degree: usize,
    pub timing: TimingConstraints,
}

impl Problem {
    pub fn new(corridor: Corridor, degree: usize, total: Option<f64>, y_min: f64) -> Result<Self, AssemblyError> {
        if degree < 3 {
            return Err(AssemblyError::invalid("degree", format!("minimum-jerk needs degree ≥ 3, got {degree}")));
        }
        let timing = assembly::timing_constraints(corridor.num_segments(), total, y_min)?;
        Ok(Self { corridor, degree, timing })
    }

    pub fn num_segments(&self) -> usize {
        self.corridor.num_segments()
    }

    pub fn assemble(&self, y: &TimeAllocation) -> Result<ParametricQp, AssemblyError> {
        assembly::assemble(&self.corridor, y, self.degree)
    }

    /// Distance-proportional allocation; needs a fixed total time.
    pub fn initial_times(&self) -> Result<TimeAllocation, AssemblyError> {
        let total = self
            .timing
            .total()
            .ok_or_else(|| AssemblyError::invalid("total_time", "initial allocation needs a total time"))?;
        assembly::initial_times(&self.corridor, total, self.timing.y_min())
    }
}

/// How elapsed time is measured for cutoffs and trace timestamps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    /// Monotonic wall clock.
    Wall,
    /// Deterministic clock charging a fixed cost per QP solve.
    QpSolves { ms_per_solve: f64 },
}

/// Owns a QP solver and counts how many lower-level solves it performs.
#[derive(Debug, Clone)]
pub struct Evaluator {
    solver: QpSolver,
    solves: usize,
    clock: Clock,
    started: Instant,
    solves_at_start: usize,
}

impl Default for Evaluator {
    fn default() -> Self {
        Self::new(QpSettings::default(), Clock::Wall)
    }
}

impl Evaluator {
    pub fn new(settings: QpSettings, clock: Clock) -> Self {
        Self { solver: QpSolver::new(settings), solves: 0, clock, started: Instant::now(), solves_at_start: 0 }
    }

    /// Assemble and solve the QP at `y`.
    pub fn evaluate(
        &mut self,
        problem: &Problem,
        y: &TimeAllocation,
        warm: Option<&QpSolution>,
    ) -> Result<(ParametricQp, QpSolution), AssemblyError> {
        let qp = problem.assemble(y)?;
        let sol = self.solver.solve(&qp, warm);
        self.solves += 1;
        Ok((qp, sol))
    }

    pub fn solves(&self) -> usize {
        self.solves
    }

    pub fn restart_clock(&mut self) {
        self.started = Instant::now();
        self.solves_at_start = self.solves;
    }

    pub fn elapsed_ms(&self) -> f64 {
        match self.clock {
            Clock::Wall => self.started.elapsed().as_secs_f64() * 1e3,
            Clock::QpSolves { ms_per_solve } => (self.solves - self.solves_at_start) as f64 * ms_per_solve,
        }
    }
}
