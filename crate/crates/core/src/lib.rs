//! Minimum-jerk trajectories through box corridors with the per-segment
//! time allocation refined by gradient descent.
//!
//! For fixed durations `y` the spline coefficients solve a convex QP
//! ([`assembly`], [`qp`]). The optimal value `f*(y)` is differentiated
//! without re-solving: at the QP optimum,
//!
//! ```text
//! ∇f*(y) = λᵀ ∇_y (Gx − h) + μᵀ ∇_y (Lx − m) + ∇_y f(x, y)
//! ```
//!
//! using the multipliers the solver already returns. [`bilevel`] wraps that
//! gradient in projected steepest descent with an adaptive Armijo search.

pub mod assembly;
pub mod bench;
pub mod bilevel;
pub mod error;
pub mod io;
pub mod qp;
pub mod spline;

pub use assembly::{
    assemble, initial_times, timing_constraints, AxisBox, BoundaryState, Corridor, ParametricQp, TimeAllocation,
    TimingConstraints,
};
pub use bilevel::{refine_time, GradientMethod, Problem, RefineConfig, RefineTrace};
pub use error::{AssemblyError, GradientError, ProblemError, RefineError, SplineError};
pub use qp::{QpSettings, QpSolution, QpSolver, QpStatus};
pub use spline::{BezierSegment, BezierSpline};
