//! Removing equality constraints by variable elimination.
//!
//! Gauss–Jordan elimination brings `Lx = m` to the form
//! `x_B + K x_N = t`, so every feasible point is `x = x₀ + Z w` with
//! `w = x_N`. Rows of `L` are sparse, so elimination only touches rows that
//! share a column with the pivot.

use nalgebra::{DMatrix, DVector};

use crate::assembly::ParametricQp;

/// Pivot magnitude, relative to the largest entry of `L`, below which the
/// remaining rows count as dependent.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct Elimination {
    /// Basic column of each pivot row.
    basic: Vec<usize>,
    /// Original row index of each pivot.
    pivot_rows: Vec<usize>,
    /// Columns left free, ascending.
    free: Vec<usize>,
    /// Row `i` of the null-space basis `Z` (`n × n_free`), sparse.
    z_rows: Vec<Vec<(usize, f64)>>,
    /// Particular solution with the free variables at zero.
    x0: DVector<f64>,
}

/// Nonzeros of each row of a dense matrix.
pub(crate) fn sparse_rows(m: &DMatrix<f64>) -> Vec<Vec<(usize, f64)>> {
    let mut rows = vec![Vec::new(); m.nrows()];
    for (c, col) in m.column_iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            if v != 0.0 {
                rows[r].push((c, v));
            }
        }
    }
    rows
}

impl Elimination {
    /// `None` when the equalities are inconsistent. Rows are pivoted in
    /// order on their largest entry among the unused columns.
    pub fn new(l: &DMatrix<f64>, m: &DVector<f64>, tol: f64) -> Option<Self> {
        let (m_e, n) = l.shape();
        let scale = l.amax();
        let mut rows: Vec<Vec<f64>> = (0..m_e).map(|r| l.row(r).iter().copied().collect()).collect();
        let mut rhs: Vec<f64> = m.iter().copied().collect();
        let mut used = vec![false; n];
        let mut basic = Vec::new();
        let mut pivot_rows = Vec::new();
        let m_scale = 1.0 + m.amax();

        for r in 0..m_e {
            let mut best = (0, 0.0);
            for (c, &v) in rows[r].iter().enumerate() {
                if !used[c] && v.abs() > best.1 {
                    best = (c, v.abs());
                }
            }
            let (pc, mag) = best;
            if scale == 0.0 || mag <= RANK_TOL * scale {
                // every remaining entry of the row is negligible
                if rhs[r].abs() > tol * m_scale {
                    return None;
                }
                continue;
            }
            let piv = rows[r][pc];
            let support: Vec<usize> = (0..n).filter(|&c| rows[r][c] != 0.0).collect();
            for &c in &support {
                rows[r][c] /= piv;
            }
            rhs[r] /= piv;
            let pivot_row: Vec<(usize, f64)> = support.iter().map(|&c| (c, rows[r][c])).collect();
            for o in 0..m_e {
                if o == r {
                    continue;
                }
                let f = rows[o][pc];
                if f == 0.0 {
                    continue;
                }
                for &(c, v) in &pivot_row {
                    rows[o][c] -= f * v;
                }
                rows[o][pc] = 0.0;
                rhs[o] -= f * rhs[r];
            }
            used[pc] = true;
            basic.push(pc);
            pivot_rows.push(r);
        }

        let free: Vec<usize> = (0..n).filter(|&c| !used[c]).collect();
        let mut column_of = vec![usize::MAX; n];
        for (k, &f) in free.iter().enumerate() {
            column_of[f] = k;
        }
        let mut z_rows = vec![Vec::new(); n];
        let mut x0 = DVector::zeros(n);
        for &f in &free {
            z_rows[f].push((column_of[f], 1.0));
        }
        for (&b, &r) in basic.iter().zip(&pivot_rows) {
            x0[b] = rhs[r];
            z_rows[b] = free.iter().filter(|&&f| rows[r][f] != 0.0).map(|&f| (column_of[f], -rows[r][f])).collect();
        }
        Some(Self { basic, pivot_rows, free, z_rows, x0 })
    }

    #[cfg(test)]
    fn z_dense(&self) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(self.x0.len(), self.free.len());
        for (i, row) in self.z_rows.iter().enumerate() {
            for &(k, v) in row {
                z[(i, k)] = v;
            }
        }
        z
    }

    /// The inequality-only QP in the free variables.
    pub fn reduce(&self, qp: &ParametricQp) -> ParametricQp {
        let nf = self.free.len();
        let mut pr = DMatrix::zeros(nf, nf);
        let mut px0 = qp.q.clone();
        for (a, row) in sparse_rows(&qp.p).iter().enumerate() {
            for &(b, v) in row {
                px0[a] += v * self.x0[b];
                for &(i, za) in &self.z_rows[a] {
                    for &(j, zb) in &self.z_rows[b] {
                        pr[(i, j)] += za * v * zb;
                    }
                }
            }
        }
        let pr = (&pr + pr.transpose()) * 0.5;
        let mut qr = DVector::zeros(nf);
        for (a, row) in self.z_rows.iter().enumerate() {
            for &(i, za) in row {
                qr[i] += za * px0[a];
            }
        }
        let m_i = qp.num_ineq();
        let mut gr = DMatrix::zeros(m_i, nf);
        let mut hr = qp.h.clone();
        for (r, row) in sparse_rows(&qp.g).iter().enumerate() {
            for &(c, v) in row {
                hr[r] -= v * self.x0[c];
                for &(k, z) in &self.z_rows[c] {
                    gr[(r, k)] += v * z;
                }
            }
        }
        ParametricQp::new(pr, qr, 0.0, gr, hr, DMatrix::zeros(0, nf), DVector::zeros(0))
    }

    pub fn expand(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut x = self.x0.clone();
        for (i, row) in self.z_rows.iter().enumerate() {
            for &(k, z) in row {
                x[i] += z * w[k];
            }
        }
        x
    }

    /// Equality multipliers from stationarity on the basic columns;
    /// dependent rows get zero.
    pub fn multipliers(&self, qp: &ParametricQp, x: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
        let mut grad = &qp.p * x + &qp.q;
        if qp.num_ineq() > 0 {
            grad += qp.g.tr_mul(lambda);
        }
        let rank = self.basic.len();
        let mut mu = DVector::zeros(qp.num_eq());
        if rank == 0 {
            return mu;
        }
        // L_Bᵀ μ_piv = −∇_B
        let lbt = DMatrix::from_fn(rank, rank, |i, j| qp.l[(self.pivot_rows[j], self.basic[i])]);
        let rhs = DVector::from_fn(rank, |i, _| -grad[self.basic[i]]);
        if let Some(sol) = lbt.lu().solve(&rhs) {
            for (k, &r) in self.pivot_rows.iter().enumerate() {
                mu[r] = sol[k];
            }
        }
        mu
    }
}
