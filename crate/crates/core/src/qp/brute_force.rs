use nalgebra::{DMatrix, DVector};

use super::{report_active_set, QpSolution, QpStatus};
use crate::assembly::ParametricQp;

/// Enumeration cost is `2^m_I` linear solves.
pub const MAX_ORACLE_CONSTRAINTS: usize = 20;

const FEAS_TOL: f64 = 1e-9;

/// Reference solver: tries every subset of inequalities as the active set,
/// keeps the KKT points that are primal and dual feasible, and returns the
/// one with the lowest objective. Returns `None` when `m_I` exceeds
/// [`MAX_ORACLE_CONSTRAINTS`].
pub fn brute_force(qp: &ParametricQp) -> Option<QpSolution> {
    let (n, m_i, m_e) = (qp.num_vars(), qp.num_ineq(), qp.num_eq());
    if m_i > MAX_ORACLE_CONSTRAINTS {
        return None;
    }
    let mut best: Option<QpSolution> = None;
    for mask in 0u32..(1u32 << m_i) {
        let rows: Vec<usize> = (0..m_i).filter(|i| mask & (1 << i) != 0).collect();
        let k = m_e + rows.len();
        if k > n {
            continue;
        }
        let dim = n + k;
        let mut kkt = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(&qp.p);
        rhs.rows_mut(0, n).copy_from(&(-&qp.q));
        for e in 0..m_e {
            for j in 0..n {
                kkt[(n + e, j)] = qp.l[(e, j)];
                kkt[(j, n + e)] = qp.l[(e, j)];
            }
            rhs[n + e] = qp.m[e];
        }
        for (s, &i) in rows.iter().enumerate() {
            let r = n + m_e + s;
            for j in 0..n {
                kkt[(r, j)] = qp.g[(i, j)];
                kkt[(j, r)] = qp.g[(i, j)];
            }
            rhs[r] = qp.h[i];
        }
        let Some(sol) = kkt.clone().lu().solve(&rhs) else { continue };
        if (&kkt * &sol - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
            continue;
        }
        let x = sol.rows(0, n).into_owned();
        let mu = sol.rows(n, m_e).into_owned();
        let mut lambda = DVector::zeros(m_i);
        for (s, &i) in rows.iter().enumerate() {
            lambda[i] = sol[n + m_e + s];
        }
        if lambda.iter().any(|&l| l < -FEAS_TOL) {
            continue;
        }
        let viol = (&qp.g * &x - &qp.h).iter().fold(0.0f64, |a, &v| a.max(v));
        if viol > FEAS_TOL {
            continue;
        }
        let objective = qp.objective(&x);
        if best.as_ref().map_or(true, |b| objective < b.objective) {
            let active_set = report_active_set(qp, &x, &lambda, 1e-7);
            best = Some(QpSolution {
                x,
                objective,
                lambda,
                mu,
                active_set,
                working_set: rows,
                status: QpStatus::Optimal,
                iterations: mask as usize + 1,
            });
        }
    }
    Some(best.unwrap_or_else(|| QpSolution::infeasible(n, m_i, m_e, 1 << m_i)))
}
