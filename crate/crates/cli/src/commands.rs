use std::fmt::Write as _;
use std::path::Path;

use timealloc::bench::{run_bench, BenchConfig};
use timealloc::bilevel::{analytic_gradient, gradient_check, refine_time, toy, Clock, Evaluator, Problem};
use timealloc::error::{GradientError, ProblemError, RefineError};
use timealloc::io::{export_trace, load, random_problem, CorridorParams, TraceFormat};
use timealloc::{GradientMethod, ParametricQp, QpSolution, QpSolver, QpStatus, RefineConfig, TimeAllocation};

use crate::output::{emit, TrajectoryOutput};

/// Largest relative error on stable components that `gradcheck` accepts.
pub const GRADCHECK_TOL: f64 = 1e-4;

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    pub fn code(&self) -> u8 {
        self.code
    }

    pub fn message(&self) -> &str {
        &self.message
    }
}

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Self {
        match e {
            ProblemError::Io { .. } => Failure::usage(e.to_string()),
            _ => Failure::invalid(e.to_string()),
        }
    }
}

fn qp_failure(status: QpStatus, what: &str) -> Failure {
    match status {
        QpStatus::Infeasible => Failure::invalid(format!("{what}: QP is infeasible")),
        other => Failure::numerical(format!("{what}: QP solver stopped with {other:?}")),
    }
}

impl From<GradientError> for Failure {
    fn from(e: GradientError) -> Self {
        match e {
            GradientError::NotOptimal(s) => qp_failure(s, "gradient"),
            GradientError::Assembly(a) => Failure::invalid(a.to_string()),
            other => Failure::numerical(other.to_string()),
        }
    }
}

impl From<RefineError> for Failure {
    fn from(e: RefineError) -> Self {
        match e {
            RefineError::InitialQp(s) => qp_failure(s, "initial time allocation"),
            RefineError::Config(m) => Failure::usage(m),
            RefineError::Assembly(a) => Failure::invalid(a.to_string()),
            RefineError::Gradient(g) => g.into(),
        }
    }
}

fn initial_times(problem: &Problem) -> Result<TimeAllocation, Failure> {
    problem.initial_times().map_err(|e| Failure::invalid(e.to_string()))
}

pub fn plan(path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let (_, problem) = load(path)?;
    let y = initial_times(&problem)?;
    let qp = problem.assemble(&y).map_err(|e| Failure::invalid(e.to_string()))?;
    let sol = QpSolver::default().solve(&qp, None);
    if !sol.is_optimal() {
        return Err(qp_failure(sol.status, "plan"));
    }
    emit(&TrajectoryOutput::new(&problem, &y, &qp, &sol)?.to_json(), out)
}

pub struct RefineOptions<'a> {
    pub problem: &'a Path,
    pub method: GradientMethod,
    pub max_iters: usize,
    pub cutoff_ms: Option<f64>,
    pub seed_times: Option<Vec<f64>>,
    pub trace: Option<&'a Path>,
    pub out: Option<&'a Path>,
    pub clock: Clock,
}

pub fn refine(o: RefineOptions<'_>) -> Result<(), Failure> {
    let (_, problem) = load(o.problem)?;
    let y0 = match o.seed_times {
        Some(v) => {
            let y = TimeAllocation::new(v).map_err(|e| Failure::invalid(format!("--seed-times: {e}")))?;
            problem.timing.check(&y).map_err(|e| Failure::invalid(format!("--seed-times: {e}")))?;
            y
        }
        None => initial_times(&problem)?,
    };
    if o.cutoff_ms.is_some_and(|c| !(c >= 0.0)) {
        return Err(Failure::usage("--cutoff-ms must be non-negative"));
    }
    let cfg =
        RefineConfig { max_iterations: o.max_iters, cutoff_ms: o.cutoff_ms, clock: o.clock, ..Default::default() };
    let res = refine_time(&problem, &y0, &cfg, o.method)?;
    let t = &res.trace;
    eprintln!(
        "{}: J {} -> {} in {} iterations, {} QP solves ({})",
        t.method,
        t.initial_objective(),
        t.final_objective(),
        t.records.len() - 1,
        t.total_solves(),
        t.terminal_reason
    );
    if let Some(p) = o.trace {
        export_trace(t, TraceFormat::from_path(p), p)?;
    }
    emit(&TrajectoryOutput::new(&problem, &res.allocation, &res.qp, &res.solution)?.to_json(), o.out)
}

pub fn gradcheck(path: Option<&Path>, seed: Option<u64>, segments: usize, h: f64) -> Result<(), Failure> {
    if !(h > 0.0) {
        return Err(Failure::usage("--h must be positive"));
    }
    let problem = match (path, seed) {
        (Some(p), _) => load(p)?.1,
        (None, Some(s)) => {
            if segments == 0 {
                return Err(Failure::usage("--segments must be at least 1"));
            }
            random_problem(s, segments, &CorridorParams::default())
        }
        (None, None) => return Err(Failure::usage("give a problem file, --seed or --toy")),
    };
    let y = initial_times(&problem)?;
    let check = gradient_check(&problem, &y, h, &mut Evaluator::default())?;
    let mut s = String::new();
    writeln!(s, "{:>3} {:>24} {:>24} {:>10} stable", "k", "analytic", "central_fd", "rel_error").unwrap();
    for k in 0..check.analytic.len() {
        writeln!(
            s,
            "{k:>3} {:>24.15e} {:>24.15e} {:>10.3e} {}",
            check.analytic[k],
            check.finite_difference[k],
            check.rel_error[k],
            if check.stable[k] { "yes" } else { "no" }
        )
        .unwrap();
    }
    let worst = check.max_stable_error();
    let unstable = check.stable.iter().filter(|s| !**s).count();
    writeln!(s, "h = {h:e}, {} QP solves, {unstable} unstable components", check.solves).unwrap();
    writeln!(s, "max stable relative error: {worst:.3e}").unwrap();
    print!("{s}");
    if worst <= GRADCHECK_TOL {
        Ok(())
    } else {
        Err(Failure::numerical(format!("max stable relative error {worst:.3e} exceeds {GRADCHECK_TOL:e}")))
    }
}

fn solve_toy(qp: &ParametricQp) -> Result<QpSolution, Failure> {
    let sol = QpSolver::default().solve(qp, None);
    if sol.is_optimal() {
        Ok(sol)
    } else {
        Err(qp_failure(sol.status, "toy"))
    }
}

pub fn gradcheck_toy(which: u8, h: f64) -> Result<(), Failure> {
    if !(h > 0.0) {
        return Err(Failure::usage("--h must be positive"));
    }
    let (build, y, title): (fn(f64) -> ParametricQp, f64, &str) = match which {
        1 => (toy::linear_term, 0.0, "f = ½x² + yx, x ≤ −1, at y = 0"),
        _ => (toy::moving_constraint, -1.0, "f = ½x², −x − y ≤ 0, at y = −1"),
    };
    let qp = build(y);
    let sol = solve_toy(&qp)?;
    let g = analytic_gradient(&qp, &sol)?[0];
    let fd = (solve_toy(&build(y + h))?.objective - solve_toy(&build(y - h))?.objective) / (2.0 * h);
    println!("toy {which}: {title}");
    println!("x* = {}", sol.x[0]);
    if which == 2 {
        println!("lambda = {}", sol.lambda[0]);
    }
    println!("analytic gradient: {g}");
    println!("central difference: {fd}");
    if which == 2 {
        let step = 0.5;
        let actual = solve_toy(&build(y + step))?.objective - sol.objective;
        println!("predicted change for dy = {step}: {}", g * step);
        println!("actual change for dy = {step}: {actual}");
    }
    let err = (g - fd).abs() / g.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
    if err <= GRADCHECK_TOL {
        Ok(())
    } else {
        Err(Failure::numerical(format!("relative error {err:.3e} exceeds {GRADCHECK_TOL:e}")))
    }
}

pub fn bench(
    seeds: u64,
    segments: (usize, usize),
    cutoffs: Vec<f64>,
    clock: Clock,
    out: Option<&Path>,
) -> Result<(), Failure> {
    if cutoffs.is_empty() || cutoffs.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(Failure::usage("--cutoffs must be non-negative finite numbers"));
    }
    if let Clock::QpSolves { ms_per_solve } = clock {
        if !(ms_per_solve > 0.0) {
            return Err(Failure::usage("--ms-per-solve must be positive"));
        }
    }
    let cfg = BenchConfig { seeds, segments, cutoffs_ms: cutoffs, clock, ..Default::default() };
    let report = run_bench(&cfg);
    if let Some(stem) = out {
        emit(&report.to_json(), Some(&stem.with_extension("json")))?;
        emit(&report.to_csv(), Some(&stem.with_extension("csv")))?;
    }
    println!("{:>10} {:>12} {:>12} {:>12} {:>12}", "cutoff_ms", "lm_median", "fd_median", "lm_mean", "fd_mean");
    for &c in &cfg.cutoffs_ms {
        let (Some(lm), Some(fd)) = (report.aggregate(GradientMethod::Lm, c), report.aggregate(GradientMethod::Fd, c))
        else {
            continue;
        };
        println!(
            "{c:>10} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            lm.median_subopt, fd.median_subopt, lm.mean_subopt, fd.mean_subopt
        );
    }
    let complete: Vec<_> = report.instances.iter().filter(|i| i.is_complete()).collect();
    let solves = |m: GradientMethod| complete.iter().map(|i| i.run(m).expect("complete").qp_solves).sum::<usize>();
    println!(
        "{} instances, {} failed; QP solves lm {} fd {}",
        report.instances.len(),
        report.failures(),
        solves(GradientMethod::Lm),
        solves(GradientMethod::Fd)
    );
    for inst in report.instances.iter().filter(|i| !i.is_complete()) {
        eprintln!("seed {} (n = {}): {}", inst.seed, inst.n, inst.error.as_deref().unwrap_or("incomplete"));
    }
    if complete.is_empty() {
        return Err(Failure::numerical("every instance failed"));
    }
    Ok(())
}
