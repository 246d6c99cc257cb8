//! LM against FD refinement over seeded corridors.
//!
//! Each method runs once per instance without a cutoff; the objective at a
//! cutoff is read from the trace as the last iteration completed in time,
//! falling back to the unrefined objective. Suboptimality is relative to the
//! best objective either method reached on that instance.

use rayon::prelude::*;
use serde::Serialize;

use crate::bilevel::{refine_time, Clock, GradientMethod, RefineConfig, RefineResult, TerminalReason};
use crate::io::{fmt_f64, random_problem, CorridorParams};

pub const BENCH_CSV_HEADER: [&str; 8] =
    ["seed", "n", "method", "cutoff_ms", "objective", "subopt", "qp_solves", "elapsed_ms"];

pub const DEFAULT_CUTOFFS_MS: [f64; 8] = [0.0, 5.0, 10.0, 20.0, 40.0, 80.0, 160.0, 320.0];

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Instances use seeds `0..seeds`.
    pub seeds: u64,
    /// Inclusive range of segment counts; seed `s` gets `lo + s mod (hi − lo + 1)`.
    pub segments: (usize, usize),
    pub cutoffs_ms: Vec<f64>,
    pub clock: Clock,
    pub params: CorridorParams,
    pub refine: RefineConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seeds: 50,
            segments: (4, 12),
            cutoffs_ms: DEFAULT_CUTOFFS_MS.to_vec(),
            clock: Clock::QpSolves { ms_per_solve: 1.0 },
            params: CorridorParams::default(),
            refine: RefineConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn segments_for(&self, seed: u64) -> usize {
        let (lo, hi) = self.segments;
        let span = (hi.max(lo) - lo + 1) as u64;
        lo + (seed % span) as usize
    }
}

/// State of one method at one cutoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffPoint {
    pub cutoff_ms: f64,
    pub objective: f64,
    pub subopt: f64,
    pub qp_solves: usize,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRun {
    pub method: GradientMethod,
    pub j_refined: f64,
    /// All lower-level solves of the run.
    pub qp_solves: usize,
    pub elapsed_ms: f64,
    pub iterations: usize,
    pub terminal_reason: TerminalReason,
    /// Largest gradient solve count of any iteration.
    pub max_gradient_solves: usize,
    /// Smallest gradient solve count of any iteration.
    pub min_gradient_solves: usize,
    pub cutoffs: Vec<CutoffPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRecord {
    pub seed: u64,
    pub n: usize,
    pub j_unrefined: Option<f64>,
    pub j_star: Option<f64>,
    pub lm: Option<MethodRun>,
    pub fd: Option<MethodRun>,
    /// Why the instance produced no comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl InstanceRecord {
    pub fn is_complete(&self) -> bool {
        self.lm.is_some() && self.fd.is_some()
    }

    pub fn run(&self, method: GradientMethod) -> Option<&MethodRun> {
        match method {
            GradientMethod::Lm => self.lm.as_ref(),
            GradientMethod::Fd => self.fd.as_ref(),
        }
    }
}

/// Mean and median suboptimality of one method at one cutoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub method: GradientMethod,
    pub cutoff_ms: f64,
    pub mean_subopt: f64,
    pub median_subopt: f64,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub seeds: u64,
    pub segments: (usize, usize),
    pub cutoffs_ms: Vec<f64>,
    pub clock: String,
    pub instances: Vec<InstanceRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl BenchReport {
    pub fn aggregate(&self, method: GradientMethod, cutoff_ms: f64) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.method == method && a.cutoff_ms == cutoff_ms)
    }

    pub fn failures(&self) -> usize {
        self.instances.iter().filter(|i| !i.is_complete()).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per complete instance, method and cutoff.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(BENCH_CSV_HEADER).expect("in-memory write");
        for inst in self.instances.iter().filter(|i| i.is_complete()) {
            for method in [GradientMethod::Lm, GradientMethod::Fd] {
                let run = inst.run(method).expect("complete instance");
                for c in &run.cutoffs {
                    w.write_record([
                        inst.seed.to_string(),
                        inst.n.to_string(),
                        method.to_string(),
                        fmt_f64(c.cutoff_ms),
                        fmt_f64(c.objective),
                        fmt_f64(c.subopt),
                        c.qp_solves.to_string(),
                        fmt_f64(c.elapsed_ms),
                    ])
                    .expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn subopt(j: f64, j_star: f64) -> f64 {
    ((j - j_star) / j_star.abs().max(f64::MIN_POSITIVE)).max(0.0)
}

fn method_run(res: &RefineResult, cutoffs: &[f64], j_star: f64) -> MethodRun {
    let t = &res.trace;
    let iters = &t.records[1..];
    let last = t.records.last().expect("starting record");
    MethodRun {
        method: t.method,
        j_refined: t.final_objective(),
        qp_solves: t.total_solves(),
        elapsed_ms: last.elapsed_ms,
        iterations: iters.len(),
        terminal_reason: t.terminal_reason,
        max_gradient_solves: iters.iter().map(|r| r.gradient_solves).max().unwrap_or(0),
        min_gradient_solves: iters.iter().map(|r| r.gradient_solves).min().unwrap_or(0),
        cutoffs: cutoffs
            .iter()
            .map(|&c| {
                let r = t.at_cutoff(c);
                CutoffPoint {
                    cutoff_ms: c,
                    objective: r.objective,
                    subopt: subopt(r.objective, j_star),
                    qp_solves: r.qp_solves,
                    elapsed_ms: r.elapsed_ms,
                }
            })
            .collect(),
    }
}

fn run_instance(cfg: &BenchConfig, seed: u64) -> InstanceRecord {
    let n = cfg.segments_for(seed);
    let mut rec = InstanceRecord { seed, n, j_unrefined: None, j_star: None, lm: None, fd: None, error: None };
    let problem = random_problem(seed, n, &cfg.params);
    let y0 = match problem.initial_times() {
        Ok(y) => y,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    let refine = RefineConfig { cutoff_ms: None, clock: cfg.clock, ..cfg.refine.clone() };
    let lm = refine_time(&problem, &y0, &refine, GradientMethod::Lm);
    let fd = refine_time(&problem, &y0, &refine, GradientMethod::Fd);
    let (lm, fd) = match (lm, fd) {
        (Ok(lm), Ok(fd)) => (lm, fd),
        (Err(e), _) => {
            rec.error = Some(format!("lm: {e}"));
            return rec;
        }
        (_, Err(e)) => {
            rec.error = Some(format!("fd: {e}"));
            return rec;
        }
    };
    let j0 = lm.trace.initial_objective();
    let j_star = j0.min(lm.trace.final_objective()).min(fd.trace.final_objective());
    rec.j_unrefined = Some(j0);
    rec.j_star = Some(j_star);
    rec.lm = Some(method_run(&lm, &cfg.cutoffs_ms, j_star));
    rec.fd = Some(method_run(&fd, &cfg.cutoffs_ms, j_star));
    rec
}

/// Run every seeded instance, in parallel across instances.
pub fn run_bench(cfg: &BenchConfig) -> BenchReport {
    let instances: Vec<InstanceRecord> = (0..cfg.seeds).into_par_iter().map(|seed| run_instance(cfg, seed)).collect();
    let mut aggregates = Vec::new();
    for method in [GradientMethod::Lm, GradientMethod::Fd] {
        for (k, &cutoff_ms) in cfg.cutoffs_ms.iter().enumerate() {
            let mut s: Vec<f64> = instances.iter().filter_map(|i| i.run(method)).map(|r| r.cutoffs[k].subopt).collect();
            if s.is_empty() {
                continue;
            }
            let mean_subopt = s.iter().sum::<f64>() / s.len() as f64;
            aggregates.push(Aggregate {
                method,
                cutoff_ms,
                mean_subopt,
                median_subopt: median(&mut s),
                instances: s.len(),
            });
        }
    }
    let clock = match cfg.clock {
        Clock::Wall => "wall".to_string(),
        Clock::QpSolves { ms_per_solve } => format!("qp_solves:{ms_per_solve}"),
    };
    BenchReport {
        seeds: cfg.seeds,
        segments: cfg.segments,
        cutoffs_ms: cfg.cutoffs_ms.clone(),
        clock,
        instances,
        aggregates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn segment_counts_cycle_through_the_range() {
        let cfg = BenchConfig { segments: (4, 6), ..Default::default() };
        let n: Vec<usize> = (0..6).map(|s| cfg.segments_for(s)).collect();
        assert_eq!(n, vec![4, 5, 6, 4, 5, 6]);
    }

    #[test]
    fn small_bench_is_consistent() {
        let cfg = BenchConfig { seeds: 2, segments: (2, 3), cutoffs_ms: vec![0.0, 1e9], ..Default::default() };
        let report = run_bench(&cfg);
        assert_eq!(report.failures(), 0);
        for inst in &report.instances {
            let (lm, fd) = (inst.lm.as_ref().unwrap(), inst.fd.as_ref().unwrap());
            // cutoff 0 falls back to the unrefined objective
            assert_eq!(lm.cutoffs[0].objective, inst.j_unrefined.unwrap());
            assert_eq!(lm.cutoffs[0].subopt, fd.cutoffs[0].subopt);
            // past convergence the better method sits at zero
            assert_eq!(lm.cutoffs[1].subopt.min(fd.cutoffs[1].subopt), 0.0);
        }
        let rows = report.to_csv().lines().count();
        assert_eq!(rows, 1 + 2 * 2 * 2);
        assert_eq!(report, run_bench(&cfg));
    }
}
