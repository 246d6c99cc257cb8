//! Lower-level QP construction.
//!
//! Decision variables are Bernstein control points, flattened as
//! `x[((segment * dim) + axis) * (degree + 1) + j]`. For a fixed time
//! allocation the minimum-jerk problem is a QP whose matrices depend on the
//! durations only through powers of `1/Δt`; every such entry gets an analytic
//! partial derivative alongside it.
//!
//! Control points are stored relative to the center of their segment's box
//! ([`origins`]). Jerk and every derivative row are invariant to that shift,
//! and it keeps the variables small, which matters for how precisely the
//! optimal value can be evaluated.

mod corridor;
mod parametric;
mod timing;

use nalgebra::{DMatrix, DVector};

pub use corridor::{AxisBox, BoundaryState, Corridor};
pub use parametric::{ParametricQp, QpPartials, SparseVec, Triplets};
pub use timing::{initial_times, timing_constraints, TimeAllocation, TimingConstraints, DEFAULT_Y_MIN};

use crate::error::AssemblyError;
use crate::spline::{binomial, jerk_cost_matrix, jerk_factor, BezierSpline};

/// Which bound an inequality row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Position control point inside the segment's box.
    Position,
    /// First-derivative control point within `±vmax`.
    Velocity,
    /// Second-derivative control point within `±amax`.
    Acceleration,
}

/// Description of one row of `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InequalityRow {
    pub kind: RowKind,
    pub segment: usize,
    pub axis: usize,
    /// Control-point index within the (derivative) segment.
    pub index: usize,
    /// `true` for the `≤ upper` row, `false` for `≥ lower`.
    pub upper: bool,
}

/// Description of one row of `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualityRow {
    Start {
        axis: usize,
        order: usize,
    },
    Goal {
        axis: usize,
        order: usize,
    },
    /// Derivative continuity at the knot between `knot` and `knot + 1`.
    Continuity {
        knot: usize,
        axis: usize,
        order: usize,
    },
}

/// Variable count for `n` segments.
pub fn num_variables(n: usize, degree: usize, dim: usize) -> usize {
    n * (degree + 1) * dim
}

/// Index of control point `j` of `axis` in `segment`.
pub fn var_index(segment: usize, axis: usize, j: usize, degree: usize, dim: usize) -> usize {
    (segment * dim + axis) * (degree + 1) + j
}

/// Per-variable offset from QP coordinates to global control points: the
/// center of the segment's box on that axis.
pub fn origins(corridor: &Corridor, degree: usize) -> DVector<f64> {
    let dim = corridor.dim();
    let mut o = DVector::zeros(num_variables(corridor.num_segments(), degree, dim));
    for (seg, b) in corridor.boxes().iter().enumerate() {
        let c = b.center();
        for (axis, &ca) in c.iter().enumerate() {
            let base = var_index(seg, axis, 0, degree, dim);
            o.rows_mut(base, degree + 1).fill(ca);
        }
    }
    o
}

/// Spline through the global control points of QP solution `x`.
pub fn trajectory(
    corridor: &Corridor,
    y: &TimeAllocation,
    degree: usize,
    x: &DVector<f64>,
) -> Result<BezierSpline, AssemblyError> {
    Ok(BezierSpline::from_flat(&(x + origins(corridor, degree)), y.as_slice(), degree, corridor.dim())?)
}

/// Assemble the QP at time allocation `y`.
pub fn assemble(corridor: &Corridor, y: &TimeAllocation, degree: usize) -> Result<ParametricQp, AssemblyError> {
    assemble_with_rows(corridor, y, degree).map(|(qp, _, _)| qp)
}

/// [`assemble`] plus a description of every inequality and equality row.
pub fn assemble_with_rows(
    corridor: &Corridor,
    y: &TimeAllocation,
    degree: usize,
) -> Result<(ParametricQp, Vec<InequalityRow>, Vec<EqualityRow>), AssemblyError> {
    let n = corridor.num_segments();
    if y.len() != n {
        return Err(AssemblyError::SegmentCount { boxes: n, segments: y.len() });
    }
    if degree < 3 {
        return Err(AssemblyError::invalid("degree", format!("minimum-jerk needs degree ≥ 3, got {degree}")));
    }
    let dim = corridor.dim();
    let nv = num_variables(n, degree, dim);
    let dt = y.as_slice();

    let ineq = inequality_rows(corridor, degree);
    let eq = equality_rows(corridor);
    let (m_i, m_e) = (ineq.len(), eq.len());

    let mut partials: Vec<QpPartials> = (0..n).map(|_| QpPartials::zeros(nv, m_i, m_e)).collect();

    // objective: block-diagonal jerk forms
    let mut p = DMatrix::zeros(nv, nv);
    let factor = jerk_factor(degree)?;
    let fr = factor.nrows();
    let mut r_mat = Triplets::new(n * dim * fr, nv);
    for (i, &dti) in dt.iter().enumerate() {
        let (q, dq) = jerk_cost_matrix(dti, degree)?;
        let scale = dti.powf(-2.5);
        let dscale = -2.5 * scale / dti;
        partials[i].dr = Triplets::new(n * dim * fr, nv);
        for k in 0..dim {
            let base = var_index(i, k, 0, degree, dim);
            p.view_mut((base, base), (degree + 1, degree + 1)).copy_from(&q);
            for a in 0..=degree {
                for b in 0..=degree {
                    partials[i].dp.push(base + a, base + b, dq[(a, b)]);
                }
            }
            let row0 = (i * dim + k) * fr;
            for a in 0..fr {
                for b in 0..=degree {
                    r_mat.push(row0 + a, base + b, scale * factor[(a, b)]);
                    partials[i].dr.push(row0 + a, base + b, dscale * factor[(a, b)]);
                }
            }
        }
    }

    let mut g = DMatrix::zeros(m_i, nv);
    let mut h = DVector::zeros(m_i);
    for (r, row) in ineq.iter().enumerate() {
        let sign = if row.upper { 1.0 } else { -1.0 };
        let (order, bound) = match row.kind {
            RowKind::Position => {
                let b = &corridor.boxes()[row.segment];
                let o = b.center()[row.axis];
                (0, if row.upper { b.max[row.axis] - o } else { o - b.min[row.axis] })
            }
            RowKind::Velocity => (1, corridor.vmax().expect("velocity rows need vmax")[row.axis]),
            RowKind::Acceleration => (2, corridor.amax().expect("acceleration rows need amax")[row.axis]),
        };
        h[r] = bound;
        push_difference(
            &mut g,
            &mut partials[row.segment].dg,
            r,
            DiffTerm { segment: row.segment, axis: row.axis, order, offset: row.index, sign },
            dt[row.segment],
            degree,
            dim,
        );
    }

    let mut l = DMatrix::zeros(m_e, nv);
    let mut m = DVector::zeros(m_e);
    let center = |seg: usize, axis: usize| corridor.boxes()[seg].center()[axis];
    for (r, row) in eq.iter().enumerate() {
        match *row {
            EqualityRow::Start { axis, order } => {
                m[r] = corridor.start().derivative(order)[axis] - if order == 0 { center(0, axis) } else { 0.0 };
                let term = DiffTerm { segment: 0, axis, order, offset: 0, sign: 1.0 };
                push_difference(&mut l, &mut partials[0].dl, r, term, dt[0], degree, dim);
            }
            EqualityRow::Goal { axis, order } => {
                let last = n - 1;
                m[r] = corridor.goal().expect("goal rows need a goal").derivative(order)[axis]
                    - if order == 0 { center(last, axis) } else { 0.0 };
                let term = DiffTerm { segment: last, axis, order, offset: degree - order, sign: 1.0 };
                push_difference(&mut l, &mut partials[last].dl, r, term, dt[last], degree, dim);
            }
            EqualityRow::Continuity { knot, axis, order } => {
                if order == 0 {
                    m[r] = center(knot + 1, axis) - center(knot, axis);
                }
                let left = DiffTerm { segment: knot, axis, order, offset: degree - order, sign: 1.0 };
                push_difference(&mut l, &mut partials[knot].dl, r, left, dt[knot], degree, dim);
                let right = DiffTerm { segment: knot + 1, axis, order, offset: 0, sign: -1.0 };
                push_difference(&mut l, &mut partials[knot + 1].dl, r, right, dt[knot + 1], degree, dim);
            }
        }
    }

    let qp = ParametricQp::new(p, DVector::zeros(nv), 0.0, g, h, l, m).with_partials(partials).with_cost_factor(r_mat);
    Ok((qp, ineq, eq))
}

/// `sign · (d!/(d-order)!) Δt^{-order} · Δ^order c_{offset}` on one axis of one segment.
struct DiffTerm {
    segment: usize,
    axis: usize,
    order: usize,
    offset: usize,
    sign: f64,
}

fn push_difference(
    mat: &mut DMatrix<f64>,
    partial: &mut Triplets,
    row: usize,
    term: DiffTerm,
    dt: f64,
    degree: usize,
    dim: usize,
) {
    let falling = (0..term.order).fold(1.0, |acc, r| acc * (degree - r) as f64);
    let scale = term.sign * falling * dt.powi(-(term.order as i32));
    let dscale = -(term.order as f64) * scale / dt;
    for l in 0..=term.order {
        let alt = if (term.order - l) % 2 == 0 { 1.0 } else { -1.0 };
        let w = alt * binomial(term.order, l);
        let col = var_index(term.segment, term.axis, term.offset + l, degree, dim);
        mat[(row, col)] += scale * w;
        if term.order > 0 {
            partial.push(row, col, dscale * w);
        }
    }
}

fn inequality_rows(corridor: &Corridor, degree: usize) -> Vec<InequalityRow> {
    let mut rows = Vec::new();
    let dim = corridor.dim();
    for segment in 0..corridor.num_segments() {
        for (kind, order, present) in [
            (RowKind::Position, 0, true),
            (RowKind::Velocity, 1, corridor.vmax().is_some()),
            (RowKind::Acceleration, 2, corridor.amax().is_some()),
        ] {
            if !present {
                continue;
            }
            for axis in 0..dim {
                for index in 0..=degree - order {
                    for upper in [true, false] {
                        rows.push(InequalityRow { kind, segment, axis, index, upper });
                    }
                }
            }
        }
    }
    rows
}

fn equality_rows(corridor: &Corridor) -> Vec<EqualityRow> {
    let dim = corridor.dim();
    let mut rows = Vec::new();
    for order in 0..3 {
        for axis in 0..dim {
            rows.push(EqualityRow::Start { axis, order });
        }
    }
    if corridor.goal().is_some() {
        for order in 0..3 {
            for axis in 0..dim {
                rows.push(EqualityRow::Goal { axis, order });
            }
        }
    }
    for knot in 0..corridor.num_segments() - 1 {
        for order in 0..3 {
            for axis in 0..dim {
                rows.push(EqualityRow::Continuity { knot, axis, order });
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn corridor3() -> Corridor {
        let boxes = vec![
            AxisBox::new(vec![-1.0, -1.0, -1.0], vec![1.5, 1.0, 1.0]),
            AxisBox::new(vec![1.0, -1.0, -1.0], vec![3.0, 2.0, 1.0]),
            AxisBox::new(vec![2.5, 1.5, -1.0], vec![4.0, 4.0, 1.0]),
        ];
        Corridor::new(
            boxes,
            BoundaryState::at_rest(vec![0.0, 0.0, 0.0]),
            Some(BoundaryState::at_rest(vec![3.5, 3.5, 0.0])),
            Some(vec![3.0, 3.0, 3.0]),
            Some(vec![5.0, 5.0, 5.0]),
        )
        .unwrap()
    }

    #[test]
    fn variable_count_is_21_per_segment() {
        let c = corridor3();
        let y = TimeAllocation::new(vec![1.0, 1.5, 1.0]).unwrap();
        let qp = assemble(&c, &y, 6).unwrap();
        assert_eq!(qp.num_vars(), 21 * 3);
        assert_eq!(num_variables(5, 6, 3), 105);
    }

    #[test]
    fn row_counts() {
        let c = corridor3();
        let y = TimeAllocation::new(vec![1.0, 1.5, 1.0]).unwrap();
        let (qp, ineq, eq) = assemble_with_rows(&c, &y, 6).unwrap();
        // per segment and axis: 14 position + 12 velocity + 10 acceleration rows
        assert_eq!(ineq.len(), 3 * 3 * 36);
        assert_eq!(qp.num_ineq(), ineq.len());
        assert_eq!(eq.len(), 9 + 9 + 2 * 9);
        assert_eq!(qp.num_eq(), eq.len());
        assert_eq!(qp.partials.len(), 3);
    }

    #[test]
    fn segment_count_mismatch() {
        let y = TimeAllocation::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(assemble(&corridor3(), &y, 6), Err(AssemblyError::SegmentCount { .. })));
    }

    #[test]
    fn objective_is_block_diagonal_jerk() {
        let c = corridor3();
        let y = TimeAllocation::new(vec![0.7, 1.5, 1.1]).unwrap();
        let qp = assemble(&c, &y, 6).unwrap();
        for i in 0..3 {
            let (q, _) = jerk_cost_matrix(y.as_slice()[i], 6).unwrap();
            for k in 0..3 {
                let b = var_index(i, k, 0, 6, 3);
                assert_eq!(qp.p.view((b, b), (7, 7)), q);
            }
        }
        let mut blocks = 0.0;
        for a in 0..qp.num_vars() {
            for b in 0..qp.num_vars() {
                if a / 7 != b / 7 {
                    blocks += qp.p[(a, b)].abs();
                }
            }
        }
        assert_eq!(blocks, 0.0);
    }

    #[test]
    fn position_rows_have_zero_partials() {
        let c = corridor3();
        let y = TimeAllocation::new(vec![0.7, 1.5, 1.1]).unwrap();
        let (qp, ineq, _) = assemble_with_rows(&c, &y, 6).unwrap();
        for d in &qp.partials {
            for &(r, _, v) in &d.dg.entries {
                if ineq[r].kind == RowKind::Position {
                    assert_eq!(v, 0.0);
                }
            }
            assert!(d.dh.entries.is_empty());
        }
    }

    fn random_corridor(rng: &mut ChaCha8Rng, n: usize) -> Corridor {
        let mut boxes = Vec::new();
        let mut x = 0.0;
        for _ in 0..n {
            let w = rng.gen_range(1.0..2.0);
            boxes.push(AxisBox::new(
                vec![x - 0.3, rng.gen_range(-1.0..-0.5), -1.0],
                vec![x + w, rng.gen_range(0.5..1.0), 1.0],
            ));
            x += w;
        }
        Corridor::new(
            boxes,
            BoundaryState { pos: vec![0.0, 0.0, 0.0], vel: vec![0.3, 0.1, 0.0], acc: vec![0.0, 0.2, 0.0] },
            Some(BoundaryState::at_rest(vec![x - 0.1, 0.0, 0.0])),
            Some(vec![2.0, 2.0, 2.0]),
            Some(vec![4.0, 4.0, 4.0]),
        )
        .unwrap()
    }

    #[test]
    fn partials_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = 1e-7;
        for _ in 0..5 {
            let n = rng.gen_range(1..5);
            let c = random_corridor(&mut rng, n);
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..2.0)).collect();
            let qp = assemble(&c, &TimeAllocation::new(y.clone()).unwrap(), 6).unwrap();
            for k in 0..n {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[k] += h;
                ym[k] -= h;
                let qpp = assemble(&c, &TimeAllocation::new(yp).unwrap(), 6).unwrap();
                let qpm = assemble(&c, &TimeAllocation::new(ym).unwrap(), 6).unwrap();
                let d = &qp.partials[k];
                let pairs = [
                    ((&qpp.g - &qpm.g) / (2.0 * h), d.dg.to_dense()),
                    ((&qpp.l - &qpm.l) / (2.0 * h), d.dl.to_dense()),
                    ((&qpp.p - &qpm.p) / (2.0 * h), d.dp.to_dense()),
                ];
                for (fd, exact) in pairs {
                    for (a, b) in fd.iter().zip(exact.iter()) {
                        let scale = b.abs().max(1.0);
                        assert!((a - b).abs() / scale < 1e-6, "fd {a} vs analytic {b}");
                    }
                }
                let fd_h = (&qpp.h - &qpm.h) / (2.0 * h);
                assert!((fd_h - d.dh.to_dense()).amax() < 1e-6);
                let fd_m = (&qpp.m - &qpm.m) / (2.0 * h);
                assert!((fd_m - d.dm.to_dense()).amax() < 1e-6);
            }
        }
    }
}
