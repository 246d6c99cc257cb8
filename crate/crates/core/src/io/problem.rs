use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::{AxisBox, BoundaryState, Corridor, DEFAULT_Y_MIN};
use crate::bilevel::Problem;
use crate::error::ProblemError;
use crate::spline::DEFAULT_DEGREE;

pub const FORMAT_VERSION: u32 = 1;

fn default_degree() -> usize {
    DEFAULT_DEGREE
}

/// On-disk problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    pub boxes: Vec<AxisBox>,
    pub start: BoundaryState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<BoundaryState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vmax: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amax: Option<Vec<f64>>,
    #[serde(default = "default_degree")]
    pub degree: usize,
}

impl ProblemFile {
    pub fn from_problem(problem: &Problem) -> Self {
        let c = &problem.corridor;
        Self {
            version: FORMAT_VERSION,
            boxes: c.boxes().to_vec(),
            start: c.start().clone(),
            goal: c.goal().cloned(),
            total_time: problem.timing.total(),
            vmax: c.vmax().map(<[f64]>::to_vec),
            amax: c.amax().map(<[f64]>::to_vec),
            degree: problem.degree,
        }
    }

    pub fn corridor(&self) -> Result<Corridor, ProblemError> {
        Ok(Corridor::new(
            self.boxes.clone(),
            self.start.clone(),
            self.goal.clone(),
            self.vmax.clone(),
            self.amax.clone(),
        )?)
    }

    /// Validated problem with the default duration floor.
    pub fn to_problem(&self) -> Result<Problem, ProblemError> {
        self.to_problem_with_floor(DEFAULT_Y_MIN)
    }

    pub fn to_problem_with_floor(&self, y_min: f64) -> Result<Problem, ProblemError> {
        if self.degree < 3 {
            return Err(ProblemError::Validation {
                field: "degree".into(),
                message: format!("minimum-jerk needs degree ≥ 3, got {}", self.degree),
            });
        }
        if let Some(t) = self.total_time {
            if !(t > 0.0) || !t.is_finite() {
                return Err(ProblemError::Validation {
                    field: "total_time".into(),
                    message: format!("must be positive, got {t}"),
                });
            }
        }
        let corridor = self.corridor()?;
        Problem::new(corridor, self.degree, self.total_time, y_min).map_err(|e| match e {
            crate::error::AssemblyError::InfeasibleTiming { .. } => {
                ProblemError::Validation { field: "total_time".into(), message: e.to_string() }
            }
            other => other.into(),
        })
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("problem file serializes");
        s.push('\n');
        s
    }

    /// Parse and check the schema version, without corridor validation.
    pub fn parse(text: &str) -> Result<Self, ProblemError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ProblemError::Parse { path: ".".into(), message: e.to_string() })?;
        match value.get("version").map(|v| v.as_u64()) {
            Some(Some(v)) if v == FORMAT_VERSION as u64 => {}
            Some(Some(v)) => return Err(ProblemError::Version { found: v as u32, expected: FORMAT_VERSION }),
            Some(None) => {
                return Err(ProblemError::Parse { path: "version".into(), message: "expected an integer".into() })
            }
            None => return Err(ProblemError::Parse { path: "version".into(), message: "missing field".into() }),
        }
        serde_path_to_error::deserialize(value)
            .map_err(|e| ProblemError::Parse { path: e.path().to_string(), message: e.into_inner().to_string() })
    }
}

/// Read and fully validate a problem file.
pub fn load(path: impl AsRef<Path>) -> Result<(ProblemFile, Problem), ProblemError> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|source| ProblemError::Io { path: path.display().to_string(), source })?;
    let file = ProblemFile::parse(&text)?;
    let problem = file.to_problem()?;
    Ok((file, problem))
}

pub fn save(file: &ProblemFile, path: impl AsRef<Path>) -> Result<(), ProblemError> {
    let path = path.as_ref();
    fs::write(path, file.to_json()).map_err(|source| ProblemError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "version": 1,
  "boxes": [{"min": [0, 0, 0], "max": [2, 1, 1]}],
  "start": {"pos": [0.5, 0.5, 0.5], "vel": [0, 0, 0], "acc": [0, 0, 0]},
  "total_time": 2.0
}"#;

    #[test]
    fn minimal_file_is_one_segment() {
        let f = ProblemFile::parse(MINIMAL).unwrap();
        let p = f.to_problem().unwrap();
        assert_eq!(p.num_segments(), 1);
        assert_eq!(p.degree, 6);
        assert_eq!(p.timing.total(), Some(2.0));
    }

    #[test]
    fn wrong_version() {
        let text = MINIMAL.replace("\"version\": 1", "\"version\": 7");
        assert!(matches!(ProblemFile::parse(&text), Err(ProblemError::Version { found: 7, expected: 1 })));
    }

    #[test]
    fn parse_error_names_the_field() {
        let text = MINIMAL.replace("[0.5, 0.5, 0.5]", "[0.5, \"x\", 0.5]");
        match ProblemFile::parse(&text) {
            Err(ProblemError::Parse { path, .. }) => assert_eq!(path, "start.pos[1]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = MINIMAL.replace("\"total_time\"", "\"totl_time\"");
        assert!(matches!(ProblemFile::parse(&text), Err(ProblemError::Parse { .. })));
    }

    #[test]
    fn disjoint_boxes_fail_at_load() {
        let text = MINIMAL.replace(
            r#"[{"min": [0, 0, 0], "max": [2, 1, 1]}]"#,
            r#"[{"min": [0, 0, 0], "max": [2, 1, 1]}, {"min": [3, 0, 0], "max": [4, 1, 1]}]"#,
        );
        match ProblemFile::parse(&text).unwrap().to_problem() {
            Err(ProblemError::Validation { field, .. }) => assert_eq!(field, "boxes[0]/boxes[1]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn too_short_total_time() {
        let text = MINIMAL.replace("2.0", "0.0005");
        match ProblemFile::parse(&text).unwrap().to_problem() {
            Err(ProblemError::Validation { field, .. }) => assert_eq!(field, "total_time"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pretty_output_round_trips() {
        let f = ProblemFile::parse(MINIMAL).unwrap();
        let again = ProblemFile::parse(&f.to_json()).unwrap();
        assert_eq!(f, again);
        assert_eq!(f.to_json(), again.to_json());
    }
}
