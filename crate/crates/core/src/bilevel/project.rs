use nalgebra::{DMatrix, DVector};

use crate::assembly::{TimeAllocation, TimingConstraints};

/// Relative norm below which the projected gradient counts as zero.
const VANISH: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedGradient {
    /// Unit descent direction, or all zeros when the projection vanishes.
    pub direction: DVector<f64>,
    /// `‖Π g‖` before normalization.
    pub norm: f64,
}

/// Project `g` onto the null space of the equality rows and of every active
/// bound row the step would push further into, then negate and normalize.
pub fn project_gradient(g: &DVector<f64>, tc: &TimingConstraints, y: &TimeAllocation) -> ProjectedGradient {
    let n = g.len();
    let yv = y.to_vector();
    let slack = &tc.b - &tc.a * &yv;
    let at_bound: Vec<usize> = (0..tc.a.nrows()).filter(|&i| slack[i] <= 1e-12 * (1.0 + tc.b[i].abs())).collect();

    let mut working: Vec<usize> = Vec::new();
    let mut proj;
    loop {
        let rows = tc.c.nrows() + working.len();
        let mut m = DMatrix::zeros(rows, n);
        m.rows_mut(0, tc.c.nrows()).copy_from(&tc.c);
        for (k, &i) in working.iter().enumerate() {
            m.row_mut(tc.c.nrows() + k).copy_from(&tc.a.row(i));
        }
        proj = if rows == 0 {
            g.clone()
        } else {
            let mmt = &m * m.transpose();
            let pinv = mmt.pseudo_inverse(1e-12).expect("pseudo-inverse of a small Gram matrix");
            g - m.transpose() * (pinv * (&m * g))
        };
        let added: Vec<usize> = at_bound
            .iter()
            .copied()
            .filter(|i| !working.contains(i) && tc.a.row(*i).dot(&(-&proj).transpose()) > 0.0)
            .collect();
        if added.is_empty() {
            break;
        }
        working.extend(added);
    }
    let norm = proj.norm();
    if norm <= VANISH * g.norm() || norm == 0.0 {
        return ProjectedGradient { direction: DVector::zeros(n), norm: 0.0 };
    }
    ProjectedGradient { direction: -proj / norm, norm }
}
