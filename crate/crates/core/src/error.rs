use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("segment duration must be positive and finite, got {0}")]
    Duration(f64),
    #[error("unsupported degree {0}")]
    Degree(usize),
    #[error("time {t} outside [0, {total}]")]
    OutOfRange { t: f64, total: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Problems found while building a corridor or assembling its QP.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("corridor has {boxes} boxes but the time allocation has {segments} segments")]
    SegmentCount { boxes: usize, segments: usize },
    #[error("duration y[{index}] = {value} is below the floor {y_min}")]
    Duration { index: usize, value: f64, y_min: f64 },
    #[error("total time {total} cannot hold {n} segments of at least {y_min} s")]
    InfeasibleTiming { total: f64, n: usize, y_min: f64 },
    #[error(transparent)]
    Spline(#[from] SplineError),
}

impl AssemblyError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        AssemblyError::Invalid { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradientError {
    #[error("gradient needs an optimal QP solution, solver reported {0:?}")]
    NotOptimal(crate::qp::QpStatus),
    #[error("finite difference failed at component {index}: QP at perturbed timing not solved ({status:?})")]
    FiniteDifference { index: usize, status: crate::qp::QpStatus },
    #[error("perturbed timing leaves the feasible set at component {0}")]
    Perturbation(usize),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("QP at the initial time allocation is not solvable ({0:?})")]
    InitialQp(crate::qp::QpStatus),
    #[error("invalid refinement config: {0}")]
    Config(String),
    #[error(transparent)]
    Gradient(#[from] GradientError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("validation failed at {field}: {message}")]
    Validation { field: String, message: String },
}

impl From<AssemblyError> for ProblemError {
    fn from(e: AssemblyError) -> Self {
        match e {
            AssemblyError::Invalid { field, message } => ProblemError::Validation { field, message },
            other => ProblemError::Validation { field: "problem".into(), message: other.to_string() },
        }
    }
}
