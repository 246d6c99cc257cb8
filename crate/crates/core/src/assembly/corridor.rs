use serde::{Deserialize, Serialize};

use crate::error::AssemblyError;

/// Axis-aligned box `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl AxisBox {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Self {
        Self { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.min.iter().zip(&self.max).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.iter().zip(self.min.iter().zip(&self.max)).all(|(&v, (&lo, &hi))| v >= lo - tol && v <= hi + tol)
    }

    /// Intersection, or `None` when it has no interior.
    pub fn intersection(&self, other: &AxisBox) -> Option<AxisBox> {
        let min: Vec<f64> = self.min.iter().zip(&other.min).map(|(a, b)| a.max(*b)).collect();
        let max: Vec<f64> = self.max.iter().zip(&other.max).map(|(a, b)| a.min(*b)).collect();
        if min.iter().zip(&max).all(|(lo, hi)| hi > lo) {
            Some(AxisBox { min, max })
        } else {
            None
        }
    }

    pub fn volume(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(lo, hi)| (hi - lo).max(0.0)).product()
    }
}

/// Position, velocity and acceleration at one end of the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryState {
    pub pos: Vec<f64>,
    pub vel: Vec<f64>,
    pub acc: Vec<f64>,
}

impl BoundaryState {
    pub fn at_rest(pos: Vec<f64>) -> Self {
        let d = pos.len();
        Self { pos, vel: vec![0.0; d], acc: vec![0.0; d] }
    }

    pub(crate) fn derivative(&self, order: usize) -> &[f64] {
        match order {
            0 => &self.pos,
            1 => &self.vel,
            2 => &self.acc,
            _ => unreachable!("boundary states carry up to acceleration"),
        }
    }
}

/// A chain of overlapping boxes, one per spline segment, with boundary
/// states and per-axis derivative bounds. `None` bounds are unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    boxes: Vec<AxisBox>,
    start: BoundaryState,
    goal: Option<BoundaryState>,
    vmax: Option<Vec<f64>>,
    amax: Option<Vec<f64>>,
}

impl Corridor {
    pub fn new(
        boxes: Vec<AxisBox>,
        start: BoundaryState,
        goal: Option<BoundaryState>,
        vmax: Option<Vec<f64>>,
        amax: Option<Vec<f64>>,
    ) -> Result<Self, AssemblyError> {
        let first = boxes.first().ok_or_else(|| AssemblyError::invalid("boxes", "corridor needs at least one box"))?;
        let dim = first.dim();
        if dim == 0 {
            return Err(AssemblyError::invalid("boxes[0].min", "boxes need at least one dimension"));
        }
        for (i, b) in boxes.iter().enumerate() {
            if b.min.len() != dim {
                return Err(AssemblyError::invalid(format!("boxes[{i}].min"), format!("expected {dim} entries")));
            }
            if b.max.len() != dim {
                return Err(AssemblyError::invalid(format!("boxes[{i}].max"), format!("expected {dim} entries")));
            }
            for k in 0..dim {
                if !b.min[k].is_finite() || !b.max[k].is_finite() {
                    return Err(AssemblyError::invalid(format!("boxes[{i}]"), "bounds must be finite"));
                }
                if b.max[k] <= b.min[k] {
                    return Err(AssemblyError::invalid(
                        format!("boxes[{i}].max[{k}]"),
                        format!("max {} must exceed min {}", b.max[k], b.min[k]),
                    ));
                }
            }
        }
        for (i, pair) in boxes.windows(2).enumerate() {
            if pair[0].intersection(&pair[1]).is_none() {
                return Err(AssemblyError::invalid(
                    format!("boxes[{i}]/boxes[{}]", i + 1),
                    "consecutive boxes do not overlap with positive volume",
                ));
            }
        }
        check_state(&start, dim, "start")?;
        if !first.contains(&start.pos, 0.0) {
            return Err(AssemblyError::invalid("start.pos", "start position lies outside boxes[0]"));
        }
        if let Some(goal) = &goal {
            check_state(goal, dim, "goal")?;
            let last = boxes.len() - 1;
            if !boxes[last].contains(&goal.pos, 0.0) {
                return Err(AssemblyError::invalid("goal.pos", format!("goal position lies outside boxes[{last}]")));
            }
        }
        for (name, bound) in [("vmax", &vmax), ("amax", &amax)] {
            if let Some(v) = bound {
                if v.len() != dim {
                    return Err(AssemblyError::invalid(name, format!("expected {dim} entries")));
                }
                if let Some(k) = v.iter().position(|b| !(*b >= 0.0) || b.is_nan()) {
                    return Err(AssemblyError::invalid(format!("{name}[{k}]"), "bound must be non-negative"));
                }
            }
        }
        Ok(Self { boxes, start, goal, vmax, amax })
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    pub fn num_segments(&self) -> usize {
        self.boxes.len()
    }

    pub fn dim(&self) -> usize {
        self.boxes[0].dim()
    }

    pub fn start(&self) -> &BoundaryState {
        &self.start
    }

    pub fn goal(&self) -> Option<&BoundaryState> {
        self.goal.as_ref()
    }

    pub fn vmax(&self) -> Option<&[f64]> {
        self.vmax.as_deref()
    }

    pub fn amax(&self) -> Option<&[f64]> {
        self.amax.as_deref()
    }

    /// Copy with derivative bounds multiplied by `factor`.
    pub fn with_scaled_bounds(&self, factor: f64) -> Self {
        let scale = |v: &Option<Vec<f64>>| v.as_ref().map(|b| b.iter().map(|x| x * factor).collect());
        Self { vmax: scale(&self.vmax), amax: scale(&self.amax), ..self.clone() }
    }

    /// Waypoints bounding each segment: start, overlap centers, then the
    /// goal (or the last box center).
    pub fn waypoints(&self) -> Vec<Vec<f64>> {
        let mut pts = vec![self.start.pos.clone()];
        for pair in self.boxes.windows(2) {
            let overlap = pair[0].intersection(&pair[1]).expect("validated overlap");
            pts.push(overlap.center());
        }
        pts.push(match &self.goal {
            Some(g) => g.pos.clone(),
            None => self.boxes[self.boxes.len() - 1].center(),
        });
        pts
    }
}

fn check_state(s: &BoundaryState, dim: usize, name: &str) -> Result<(), AssemblyError> {
    for (field, v) in [("pos", &s.pos), ("vel", &s.vel), ("acc", &s.acc)] {
        if v.len() != dim {
            return Err(AssemblyError::invalid(format!("{name}.{field}"), format!("expected {dim} entries")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(AssemblyError::invalid(format!("{name}.{field}"), "entries must be finite"));
        }
    }
    Ok(())
}
