//! `timealloc`: plan, refine and benchmark corridor trajectories.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use timealloc::GradientMethod;

#[derive(Debug, Parser)]
#[command(name = "timealloc", version, about = "Minimum-jerk corridor trajectories with refined time allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the QP once at the distance-proportional time allocation.
    Plan(PlanArgs),
    /// Refine the time allocation by projected gradient descent.
    Refine(RefineArgs),
    /// Compare the multiplier gradient against central differences.
    Gradcheck(GradcheckArgs),
    /// Run LM and FD refinement over seeded corridors.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Trajectory output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Lm,
    Fd,
}

impl From<MethodArg> for GradientMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Lm => GradientMethod::Lm,
            MethodArg::Fd => GradientMethod::Fd,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClockArg {
    /// Monotonic wall clock.
    Wall,
    /// Fixed cost per QP solve; deterministic.
    Solves,
}

#[derive(Debug, Args)]
struct RefineArgs {
    /// Problem file (JSON).
    problem: PathBuf,
    #[arg(long, value_enum, default_value = "lm")]
    method: MethodArg,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    /// Stop between iterations once this many milliseconds have passed.
    #[arg(long)]
    cutoff_ms: Option<f64>,
    /// Starting durations, comma separated, instead of the distance heuristic.
    #[arg(long, value_delimiter = ',')]
    seed_times: Option<Vec<f64>>,
    /// Trace output; CSV when the path ends in `.csv`, JSON otherwise.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Trajectory output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "wall")]
    clock: ClockArg,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    /// Problem file (JSON); generated from `--seed` when omitted.
    #[arg(conflicts_with_all = ["seed", "toy"])]
    problem: Option<PathBuf>,
    /// Seed of a generated corridor.
    #[arg(long, conflicts_with = "toy")]
    seed: Option<u64>,
    /// Segment count of a generated corridor.
    #[arg(long, default_value_t = 6)]
    segments: usize,
    /// Central difference step.
    #[arg(long, default_value_t = 1e-6)]
    h: f64,
    /// One-variable example with a hand-derived gradient (1 or 2).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    toy: Option<u8>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Number of seeded instances.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
    /// Segment counts, `lo-hi` or a single value.
    #[arg(long, default_value = "4-12", value_parser = parse_range)]
    segments: (usize, usize),
    /// Cutoffs in milliseconds, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,5,10,20,40,80,160,320")]
    cutoffs: Vec<f64>,
    /// Output stem; writes `<stem>.json` and `<stem>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "solves")]
    clock: ClockArg,
    /// Milliseconds charged per QP solve by the `solves` clock.
    #[arg(long, default_value_t = 1.0)]
    ms_per_solve: f64,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad segment count '{t}': {e}"));
    let (lo, hi) = match s.split_once('-') {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if lo < 1 || hi < lo {
        return Err(format!("segment range must satisfy 1 ≤ lo ≤ hi, got {lo}-{hi}"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Plan(a) => commands::plan(&a.problem, a.out.as_deref()),
        Command::Refine(a) => commands::refine(commands::RefineOptions {
            problem: &a.problem,
            method: a.method.into(),
            max_iters: a.max_iters,
            cutoff_ms: a.cutoff_ms,
            seed_times: a.seed_times,
            trace: a.trace.as_deref(),
            out: a.out.as_deref(),
            clock: clock(a.clock, 1.0),
        }),
        Command::Gradcheck(a) => match a.toy {
            Some(k) => commands::gradcheck_toy(k, a.h),
            None => commands::gradcheck(a.problem.as_deref(), a.seed, a.segments, a.h),
        },
        Command::Bench(a) => {
            commands::bench(a.seeds, a.segments, a.cutoffs, clock(a.clock, a.ms_per_solve), a.out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn clock(c: ClockArg, ms_per_solve: f64) -> timealloc::bilevel::Clock {
    match c {
        ClockArg::Wall => timealloc::bilevel::Clock::Wall,
        ClockArg::Solves => timealloc::bilevel::Clock::QpSolves { ms_per_solve },
    }
}
