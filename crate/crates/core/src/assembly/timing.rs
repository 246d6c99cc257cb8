use nalgebra::{DMatrix, DVector};

use super::Corridor;
use crate::error::AssemblyError;

/// Smallest allowed segment duration unless configured otherwise.
pub const DEFAULT_Y_MIN: f64 = 1e-3;

/// Segment durations `y = (Δt₁, …, Δtₙ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAllocation {
    durations: Vec<f64>,
}

impl TimeAllocation {
    /// Accepts any finite positive durations; feasibility against a floor or
    /// total is checked by [`TimingConstraints::check`].
    pub fn new(durations: Vec<f64>) -> Result<Self, AssemblyError> {
        if durations.is_empty() {
            return Err(AssemblyError::invalid("durations", "need at least one segment"));
        }
        if let Some(i) = durations.iter().position(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(AssemblyError::Duration { index: i, value: durations[i], y_min: 0.0 });
        }
        Ok(Self { durations })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.durations
    }

    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.durations.iter().sum()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.durations)
    }
}

/// Outer-level constraints `A y ≤ b`, `C y = d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingConstraints {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DMatrix<f64>,
    pub d: DVector<f64>,
    y_min: f64,
    total: Option<f64>,
}

/// Duration floor `y ≥ y_min` and, when `total` is given, `𝟙ᵀy = total`.
pub fn timing_constraints(n: usize, total: Option<f64>, y_min: f64) -> Result<TimingConstraints, AssemblyError> {
    if n == 0 {
        return Err(AssemblyError::invalid("n", "need at least one segment"));
    }
    if !(y_min > 0.0) || !y_min.is_finite() {
        return Err(AssemblyError::invalid("y_min", "duration floor must be positive"));
    }
    if let Some(t) = total {
        if !(t > n as f64 * y_min) || !t.is_finite() {
            return Err(AssemblyError::InfeasibleTiming { total: t, n, y_min });
        }
    }
    let a = -DMatrix::identity(n, n);
    let b = DVector::from_element(n, -y_min);
    let (c, d) = match total {
        Some(t) => (DMatrix::from_element(1, n, 1.0), DVector::from_element(1, t)),
        None => (DMatrix::zeros(0, n), DVector::zeros(0)),
    };
    Ok(TimingConstraints { a, b, c, d, y_min, total })
}

impl TimingConstraints {
    pub fn num_segments(&self) -> usize {
        self.a.ncols()
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn total(&self) -> Option<f64> {
        self.total
    }

    pub fn check(&self, y: &TimeAllocation) -> Result<(), AssemblyError> {
        if y.len() != self.num_segments() {
            return Err(AssemblyError::SegmentCount { boxes: self.num_segments(), segments: y.len() });
        }
        if let Some(i) = y.as_slice().iter().position(|&v| v < self.y_min) {
            return Err(AssemblyError::Duration { index: i, value: y.as_slice()[i], y_min: self.y_min });
        }
        if let Some(t) = self.total {
            let s = y.total();
            if (s - t).abs() > 1e-12 * t.max(1.0) {
                return Err(AssemblyError::invalid("durations", format!("sum {s} differs from total time {t}")));
            }
        }
        Ok(())
    }

    /// Clip to the floor, then restore the total (if any) by shrinking or
    /// stretching the slack above the floor. Every output entry is `≥ y_min`
    /// and sums to the total up to one rounding.
    pub fn restore(&self, y: &[f64]) -> Vec<f64> {
        let y_min = self.y_min;
        let mut out: Vec<f64> = y.iter().map(|v| if v.is_nan() { y_min } else { v.max(y_min) }).collect();
        let Some(total) = self.total else {
            return out;
        };
        let sum: f64 = out.iter().sum();
        if sum > total {
            let slack: f64 = out.iter().map(|v| v - y_min).sum();
            let target = total - y_min * out.len() as f64;
            let ratio = target / slack;
            for v in &mut out {
                *v = y_min + (*v - y_min) * ratio;
            }
        } else if sum < total {
            let ratio = total / sum;
            for v in &mut out {
                *v *= ratio;
            }
        }
        // put the rounding residue on the largest entry
        let imax = out.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
        for _ in 0..3 {
            let residue = total - out.iter().sum::<f64>();
            if residue == 0.0 {
                break;
            }
            out[imax] += residue;
        }
        out
    }
}

/// Heuristic starting allocation: durations proportional to the distance
/// between consecutive waypoints (see [`Corridor::waypoints`]).
pub fn initial_times(corridor: &Corridor, total: f64, y_min: f64) -> Result<TimeAllocation, AssemblyError> {
    let n = corridor.num_segments();
    let tc = timing_constraints(n, Some(total), y_min)?;
    let pts = corridor.waypoints();
    let dist: Vec<f64> =
        pts.windows(2).map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()).collect();
    let sum: f64 = dist.iter().sum();
    let raw: Vec<f64> =
        if sum > 0.0 { dist.iter().map(|d| total * d / sum).collect() } else { vec![total / n as f64; n] };
    let y = tc.restore(&raw);
    TimeAllocation::new(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{AxisBox, BoundaryState};

    fn line_corridor(lengths: &[f64]) -> Corridor {
        // boxes along x whose overlap centers sit at the cumulative lengths
        let mut boxes = Vec::new();
        let mut x = 0.0;
        for (i, len) in lengths.iter().enumerate() {
            let lo = if i == 0 { -0.5 } else { x - 0.1 };
            let hi = x + len + 0.1;
            boxes.push(AxisBox::new(vec![lo, -1.0, -1.0], vec![hi, 1.0, 1.0]));
            x += len;
        }
        Corridor::new(
            boxes,
            BoundaryState::at_rest(vec![0.0, 0.0, 0.0]),
            Some(BoundaryState::at_rest(vec![x, 0.0, 0.0])),
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn symmetric_split() {
        let y = initial_times(&line_corridor(&[1.0, 1.0]), 4.0, DEFAULT_Y_MIN).unwrap();
        assert_eq!(y.as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn proportional_split() {
        let y = initial_times(&line_corridor(&[1.0, 3.0]), 4.0, DEFAULT_Y_MIN).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 3.0]);
    }

    #[test]
    fn floor_is_respected() {
        let y = initial_times(&line_corridor(&[1e-6, 5.0, 1e-6]), 1.0, 0.01).unwrap();
        assert!(y.as_slice().iter().all(|&v| v >= 0.01));
        assert!((y.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constraint_shapes() {
        let tc = timing_constraints(2, Some(1.0), 0.001).unwrap();
        assert_eq!(tc.a, -DMatrix::<f64>::identity(2, 2));
        assert_eq!(tc.b.as_slice(), &[-0.001, -0.001]);
        assert_eq!(tc.c.as_slice(), &[1.0, 1.0]);
        assert_eq!(tc.d.as_slice(), &[1.0]);

        let free = timing_constraints(3, None, 0.001).unwrap();
        assert_eq!(free.c.nrows(), 0);
        assert_eq!(free.d.len(), 0);
    }

    #[test]
    fn infeasible_total() {
        assert!(matches!(timing_constraints(3, Some(0.003), 0.001), Err(AssemblyError::InfeasibleTiming { .. })));
        assert!(timing_constraints(0, None, 0.001).is_err());
    }

    #[test]
    fn restore_keeps_floor_and_total() {
        let tc = timing_constraints(4, Some(2.0), 0.05).unwrap();
        let y = tc.restore(&[-0.3, 1.2, 0.9, 0.2]);
        assert!(y.iter().all(|&v| v >= 0.05));
        assert!((y.iter().sum::<f64>() - 2.0).abs() <= 1e-12);
        let y = tc.restore(&[0.1, 0.1, 0.1, 0.1]);
        assert!((y.iter().sum::<f64>() - 2.0).abs() <= 1e-12);
    }
}
