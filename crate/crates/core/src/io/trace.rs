use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::bilevel::RefineTrace;
use crate::error::ProblemError;

pub const TRACE_CSV_HEADER: [&str; 6] = ["iter", "elapsed_ms", "objective", "grad_norm", "alpha", "qp_solves"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Json,
    Csv,
}

impl TraceFormat {
    /// Format implied by a file extension; JSON unless it ends in `.csv`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => TraceFormat::Csv,
            _ => TraceFormat::Json,
        }
    }
}

impl FromStr for TraceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(TraceFormat::Json),
            "csv" => Ok(TraceFormat::Csv),
            other => Err(format!("unknown trace format '{other}', expected json or csv")),
        }
    }
}

/// Shortest decimal that round-trips, matching the JSON output.
pub(crate) fn fmt_f64(v: f64) -> String {
    serde_json::to_string(&v).expect("finite float")
}

pub fn trace_to_json(trace: &RefineTrace) -> String {
    let mut s = serde_json::to_string_pretty(trace).expect("trace serializes");
    s.push('\n');
    s
}

/// One row per record and a `# terminal_reason=` footer.
pub fn trace_to_csv(trace: &RefineTrace) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_CSV_HEADER).expect("in-memory write");
    for r in &trace.records {
        w.write_record([
            r.iter.to_string(),
            fmt_f64(r.elapsed_ms),
            fmt_f64(r.objective),
            r.grad_norm.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.alpha),
            r.qp_solves.to_string(),
        ])
        .expect("in-memory write");
    }
    let mut out = String::from_utf8(w.into_inner().expect("flush")).expect("utf-8");
    out.push_str(&format!("# method={} terminal_reason={}\n", trace.method, trace.terminal_reason));
    out
}

pub fn export_trace(trace: &RefineTrace, format: TraceFormat, path: impl AsRef<Path>) -> Result<(), ProblemError> {
    let path = path.as_ref();
    let text = match format {
        TraceFormat::Json => trace_to_json(trace),
        TraceFormat::Csv => trace_to_csv(trace),
    };
    fs::write(path, text).map_err(|source| ProblemError::Io { path: path.display().to_string(), source })
}
