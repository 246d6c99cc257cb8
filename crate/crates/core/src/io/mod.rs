//! Problem files, seeded corridor generation and trace export.

mod generator;
mod problem;
mod trace;

pub use generator::{random_corridor, random_problem, suggested_total_time, CorridorParams};
pub use problem::{load, save, ProblemFile, FORMAT_VERSION};
pub(crate) use trace::fmt_f64;
pub use trace::{export_trace, trace_to_csv, trace_to_json, TraceFormat, TRACE_CSV_HEADER};
