use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{initial_times, AxisBox, BoundaryState, Corridor, DEFAULT_Y_MIN};
use crate::bilevel::Problem;
use crate::qp::QpSolver;
use crate::spline::DEFAULT_DEGREE;

/// Knobs for [`random_corridor`]. Out-of-range values are clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorParams {
    pub min_box_size: f64,
    pub max_box_size: f64,
    /// Overlap depth along the walking axis as a fraction of the smaller box.
    pub min_overlap: f64,
    pub max_overlap: f64,
    /// Probability that a step walks along y or z instead of x.
    pub turn_probability: f64,
    /// Average speed used to set the total time.
    pub nominal_speed: f64,
    pub vmax: f64,
    pub amax: f64,
    pub degree: usize,
    pub y_min: f64,
}

impl Default for CorridorParams {
    fn default() -> Self {
        Self {
            min_box_size: 1.0,
            max_box_size: 3.0,
            min_overlap: 0.2,
            max_overlap: 0.45,
            turn_probability: 0.4,
            nominal_speed: 1.0,
            vmax: 3.0,
            amax: 6.0,
            degree: DEFAULT_DEGREE,
            y_min: DEFAULT_Y_MIN,
        }
    }
}

impl CorridorParams {
    fn clamped(&self) -> Self {
        let min_box_size = self.min_box_size.clamp(0.1, 100.0);
        let min_overlap = self.min_overlap.clamp(0.05, 0.9);
        Self {
            min_box_size,
            max_box_size: self.max_box_size.clamp(min_box_size, 100.0),
            min_overlap,
            max_overlap: self.max_overlap.clamp(min_overlap, 0.9),
            turn_probability: self.turn_probability.clamp(0.0, 1.0),
            nominal_speed: self.nominal_speed.clamp(1e-3, 1e3),
            vmax: self.vmax.clamp(1e-3, 1e6),
            amax: self.amax.clamp(1e-3, 1e6),
            degree: self.degree.clamp(5, 12),
            y_min: self.y_min.clamp(1e-6, 1e-1),
        }
    }
}

/// Total time for a corridor at the given average speed along its waypoints.
pub fn suggested_total_time(corridor: &Corridor, speed: f64) -> f64 {
    let pts = corridor.waypoints();
    let len: f64 =
        pts.windows(2).map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()).sum();
    (len / speed).max(0.1 * corridor.num_segments() as f64)
}

/// Seeded 3-D corridor of `n` boxes walking monotonically through space,
/// with random rest-to-rest start and goal. Derivative bounds are widened
/// until the QP at the heuristic allocation is solvable.
pub fn random_corridor(seed: u64, n: usize, params: &CorridorParams) -> Corridor {
    let p = params.clamped();
    let n = n.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs = [1.0, if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, if rng.gen_bool(0.5) { 1.0 } else { -1.0 }];

    let size =
        |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..3).map(|_| rng.gen_range(p.min_box_size..=p.max_box_size)).collect() };
    let s0 = size(&mut rng);
    let mut boxes = vec![AxisBox::new(s0.iter().map(|s| -0.5 * s).collect(), s0.iter().map(|s| 0.5 * s).collect())];
    for _ in 1..n {
        let prev = boxes.last().expect("first box").clone();
        let s = size(&mut rng);
        let axis = if rng.gen_bool(p.turn_probability) {
            if rng.gen_bool(0.75) {
                1
            } else {
                2
            }
        } else {
            0
        };
        let mut min = vec![0.0; 3];
        for k in 0..3 {
            let prev_size = prev.max[k] - prev.min[k];
            if k == axis {
                let depth = rng.gen_range(p.min_overlap..=p.max_overlap) * prev_size.min(s[k]);
                min[k] = if signs[k] > 0.0 { prev.max[k] - depth } else { prev.min[k] + depth - s[k] };
            } else {
                let margin = 0.3 * prev_size.min(s[k]);
                min[k] = rng.gen_range(prev.min[k] - s[k] + margin..=prev.max[k] - margin);
            }
        }
        let max = min.iter().zip(&s).map(|(a, b)| a + b).collect();
        boxes.push(AxisBox::new(min, max));
    }

    let interior = |rng: &mut ChaCha8Rng, b: &AxisBox| -> Vec<f64> {
        (0..3)
            .map(|k| {
                let w = b.max[k] - b.min[k];
                rng.gen_range(b.min[k] + 0.15 * w..=b.max[k] - 0.15 * w)
            })
            .collect()
    };
    let start = interior(&mut rng, &boxes[0]);
    let goal = interior(&mut rng, &boxes[n - 1]);
    let corridor = Corridor::new(
        boxes,
        BoundaryState::at_rest(start),
        Some(BoundaryState::at_rest(goal)),
        Some(vec![p.vmax; 3]),
        Some(vec![p.amax; 3]),
    )
    .expect("generated corridor is valid by construction");

    let total = suggested_total_time(&corridor, p.nominal_speed);
    let mut scaled = corridor;
    let mut solver = QpSolver::default();
    for _ in 0..12 {
        let y = initial_times(&scaled, total, p.y_min).expect("suggested total time is feasible");
        let qp = crate::assembly::assemble(&scaled, &y, p.degree).expect("generated corridor assembles");
        if solver.solve(&qp, None).is_optimal() {
            break;
        }
        scaled = scaled.with_scaled_bounds(1.5);
    }
    scaled
}

/// [`random_corridor`] with total time fixed at the nominal-speed estimate.
pub fn random_problem(seed: u64, n: usize, params: &CorridorParams) -> Problem {
    let p = params.clamped();
    let corridor = random_corridor(seed, n, params);
    let total = suggested_total_time(&corridor, p.nominal_speed);
    Problem::new(corridor, p.degree, Some(total), p.y_min).expect("generated problem is valid")
}
