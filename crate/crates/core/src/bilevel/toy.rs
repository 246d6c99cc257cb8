//! One-variable QPs whose value gradient is known by hand.

use nalgebra::{DMatrix, DVector};

use crate::assembly::{ParametricQp, QpPartials, SparseVec};

/// `f = ½x² + yx` subject to `x ≤ −1`, which does not depend on `y`.
/// At `y = 0` the optimum is `x = −1` and `df*/dy = x = −1`.
pub fn linear_term(y: f64) -> ParametricQp {
    let mut d = QpPartials::zeros(1, 1, 0);
    d.dq = SparseVec { len: 1, entries: vec![(0, 1.0)] };
    ParametricQp::new(
        DMatrix::from_element(1, 1, 1.0),
        DVector::from_element(1, y),
        0.0,
        DMatrix::from_element(1, 1, 1.0),
        DVector::from_element(1, -1.0),
        DMatrix::zeros(0, 1),
        DVector::zeros(0),
    )
    .with_partials(vec![d])
}

/// `f = ½x²` subject to `−x − y ≤ 0`, binding at `y = −1` with `λ = 1`,
/// so `df*/dy = −1` there.
pub fn moving_constraint(y: f64) -> ParametricQp {
    let mut d = QpPartials::zeros(1, 1, 0);
    d.dh = SparseVec { len: 1, entries: vec![(0, 1.0)] };
    ParametricQp::new(
        DMatrix::from_element(1, 1, 1.0),
        DVector::zeros(1),
        0.0,
        DMatrix::from_element(1, 1, -1.0),
        DVector::from_element(1, y),
        DMatrix::zeros(0, 1),
        DVector::zeros(0),
    )
    .with_partials(vec![d])
}
