//! Goldfarb–Idnani dual active-set method.
//!
//! Equalities are eliminated first (see [`super::eliminate`]); the method
//! then runs on inequalities written as `aᵢᵀw ≥ bᵢ`. The factor `J`
//! satisfies `J Jᵀ = H⁻¹` and `Jᵀ A_act = [R; 0]` with `R` upper triangular,
//! so both the primal step (trailing columns of `J`) and the dual step
//! (`R⁻¹`) come from the same orthogonal updates.

use nalgebra::{DMatrix, DVector};

use super::eliminate::Elimination;
use super::{report_active_set, QpSettings, QpSolution, QpStatus};
use crate::assembly::ParametricQp;

/// Relative size of `‖J₂ᵀa‖` below which a normal is treated as dependent on
/// the working set.
const DEPENDENCE_TOL: f64 = 1e-11;

/// Solver with reusable factor storage.
#[derive(Debug, Clone, Default)]
pub struct QpSolver {
    settings: QpSettings,
    j: DMatrix<f64>,
    r: DMatrix<f64>,
}

/// Result of the inequality-only method.
struct Core {
    x: DVector<f64>,
    lambda: DVector<f64>,
    working_set: Vec<usize>,
    status: QpStatus,
    iterations: usize,
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let r = a.hypot(b);
    if r == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / r, b / r, r)
    }
}

/// Rotate columns `a < b` in place; columns are contiguous in storage.
fn rotate_columns(m: &mut DMatrix<f64>, a: usize, b: usize, c: f64, s: f64) {
    debug_assert!(a < b);
    let n = m.nrows();
    let (left, right) = m.as_mut_slice().split_at_mut(b * n);
    let ca = &mut left[a * n..(a + 1) * n];
    let cb = &mut right[..n];
    for (x, y) in ca.iter_mut().zip(cb.iter_mut()) {
        let (xv, yv) = (*x, *y);
        *x = c * xv + s * yv;
        *y = -s * xv + c * yv;
    }
}

/// `L⁻¹` for lower-triangular `L`, skipping the structural zeros.
fn invert_lower(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::zeros(n, n);
    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j..].iter_mut().for_each(|v| *v = 0.0);
        x[j] = 1.0;
        for k in j..n {
            let xk = x[k] / l[(k, k)];
            x[k] = xk;
            if xk != 0.0 {
                let col = &l.as_slice()[k * n + k + 1..(k + 1) * n];
                for (xi, li) in x[k + 1..].iter_mut().zip(col) {
                    *xi -= xk * li;
                }
            }
        }
        inv.as_mut_slice()[j * n + j..(j + 1) * n].copy_from_slice(&x[j..]);
    }
    inv
}

impl QpSolver {
    pub fn new(settings: QpSettings) -> Self {
        Self { settings, j: DMatrix::zeros(0, 0), r: DMatrix::zeros(0, 0) }
    }

    pub fn settings(&self) -> &QpSettings {
        &self.settings
    }

    /// Solve `qp`. A previous solution seeds the working set; the result is
    /// the same up to tolerances, only the iteration count changes.
    pub fn solve(&mut self, qp: &ParametricQp, warm: Option<&QpSolution>) -> QpSolution {
        let n = qp.num_vars();
        let (m_i, m_e) = (qp.num_ineq(), qp.num_eq());
        let warm_set = warm.map_or(&[][..], |w| w.working_set.as_slice());

        let (core, x, mu) = if m_e == 0 {
            let core = self.solve_inequalities(qp, warm_set);
            let x = core.x.clone();
            (core, x, DVector::zeros(0))
        } else {
            let Some(elim) = Elimination::new(&qp.l, &qp.m, self.settings.tol) else {
                return QpSolution::infeasible(n, m_i, m_e, 0);
            };
            let core = self.solve_inequalities(&elim.reduce(qp), warm_set);
            let x = elim.expand(&core.x);
            let mu = elim.multipliers(qp, &x, &core.lambda);
            (core, x, mu)
        };
        if core.status == QpStatus::Infeasible {
            return QpSolution::infeasible(n, m_i, m_e, core.iterations);
        }
        let lambda = core.lambda;
        let active_set = report_active_set(qp, &x, &lambda, self.settings.active_tol);
        // Lagrangian value: equals f(x) at an exact KKT point, and is only
        // second-order sensitive to rounding in x
        let objective = qp.objective(&x) + lambda.dot(&(&qp.g * &x - &qp.h)) + mu.dot(&(&qp.l * &x - &qp.m));
        QpSolution {
            objective,
            x,
            lambda,
            mu,
            active_set,
            working_set: core.working_set,
            status: core.status,
            iterations: core.iterations,
        }
    }

    /// Dual active-set iterations on `min ½wᵀPw + qᵀw  s.t.  Gw ≤ h`.
    fn solve_inequalities(&mut self, qp: &ParametricQp, warm: &[usize]) -> Core {
        let n = qp.num_vars();
        let m_i = qp.num_ineq();
        let max_iter = self.settings.max_iter.unwrap_or(10 * (n + m_i) + 100);
        let infeasible = |iterations| Core {
            x: DVector::from_element(n, f64::NAN),
            lambda: DVector::zeros(m_i),
            working_set: Vec::new(),
            status: QpStatus::Infeasible,
            iterations,
        };

        let Some(x0) = self.factorize(qp) else {
            return infeasible(0);
        };
        // normals in `−Gᵢw ≥ −hᵢ` form, one per column
        let at = -qp.g.transpose();
        let slack_of = |i: usize, x: &DVector<f64>| qp.h[i] + at.column(i).dot(x);
        let norms: Vec<f64> = at.column_iter().map(|c| c.norm().max(f64::MIN_POSITIVE)).collect();

        let mut act: Vec<usize> = Vec::new();
        for &i in warm {
            if i < m_i && !act.contains(&i) && self.add_to_factor(&at.column(i).into_owned(), act.len()) {
                act.push(i);
            }
        }

        // minimizer on the warm working set; shed rows with negative multipliers
        let (mut x, mut u) = loop {
            let (x, u) = self.working_set_minimizer(qp, &act, &x0, &slack_of);
            let worst = (0..act.len()).filter(|&k| u[k] < 0.0).min_by(|&a, &b| u[a].total_cmp(&u[b]));
            match worst {
                Some(k) => {
                    self.drop_from_factor(k, act.len());
                    act.remove(k);
                }
                None => break (x, u),
            }
        };

        let mut iterations = 1;
        let mut status = QpStatus::Optimal;
        'outer: loop {
            // most violated inequality, scaled by its normal length
            let slack = &qp.h - &qp.g * &x;
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..m_i {
                let viol = -slack[i];
                if viol > 1e-10 * (1.0 + qp.h[i].abs()) && !act.contains(&i) {
                    let score = viol / norms[i];
                    if pick.map_or(true, |(_, best)| score > best) {
                        pick = Some((i, score));
                    }
                }
            }
            let Some((p, _)) = pick else { break };
            let a = at.column(p).into_owned();
            let mut u_p = 0.0;

            loop {
                if iterations >= max_iter {
                    status = QpStatus::MaxIter;
                    break 'outer;
                }
                iterations += 1;
                let q = act.len();
                let d = self.j.tr_mul(&a);
                let z = self.j.columns(q, n - q) * d.rows(q, n - q);
                let r = self.solve_r(&d, q);

                let mut t1 = f64::INFINITY;
                let mut block = None;
                for k in 0..q {
                    if r[k] > 0.0 {
                        let ratio = u[k] / r[k];
                        if ratio < t1 {
                            t1 = ratio;
                            block = Some(k);
                        }
                    }
                }
                let za = z.dot(&a);
                let t2 = if za > (DEPENDENCE_TOL * d.norm()).powi(2) { -slack_of(p, &x) / za } else { f64::INFINITY };
                let t = t1.min(t2);
                if !t.is_finite() {
                    return infeasible(iterations);
                }
                for k in 0..q {
                    u[k] -= t * r[k];
                }
                u_p += t;
                if t2.is_finite() {
                    x.axpy(t, &z, 1.0);
                }
                if t2 <= t1 {
                    self.add_to_factor(&a, q);
                    act.push(p);
                    u.push(u_p);
                    break;
                }
                let k = block.expect("partial step needs a blocking constraint");
                self.drop_from_factor(k, q);
                act.remove(k);
                u.remove(k);
            }
        }

        let mut lambda = DVector::zeros(m_i);
        for (k, &i) in act.iter().enumerate() {
            lambda[i] = u[k].max(0.0);
        }
        Core { x, lambda, working_set: act, status, iterations }
    }

    /// Builds `J = L⁻ᵀ` for the Cholesky factor of `P` (shifted when
    /// numerically singular) and returns the unconstrained minimizer.
    fn factorize(&mut self, qp: &ParametricQp) -> Option<DVector<f64>> {
        let n = qp.num_vars();
        let h = (&qp.p + qp.p.transpose()) * 0.5;
        let mut shift = 0.0;
        let chol = loop {
            let mut hs = h.clone();
            for i in 0..n {
                hs[(i, i)] += shift;
            }
            match hs.cholesky() {
                Some(c)
                    if c.l_dirty().diagonal().iter().all(|&v| v * v >= self.settings.regularization) || shift > 0.0 =>
                {
                    break c
                }
                _ => {
                    shift = if shift == 0.0 { self.settings.regularization } else { shift * 10.0 };
                    if shift > 1e3 {
                        return None;
                    }
                }
            }
        };
        self.j = invert_lower(&chol.l()).transpose();
        self.r = DMatrix::zeros(n, n);
        let jt_q = self.j.tr_mul(&qp.q);
        Some(-(&self.j * jt_q))
    }
    /// Append normal `a` as working-set column `q`. Returns `false` (and
    /// leaves the factors untouched) when `a` is dependent on the set.
    fn add_to_factor(&mut self, a: &DVector<f64>, q: usize) -> bool {
        let n = self.j.nrows();
        let mut d = self.j.tr_mul(a);
        let tail = d.rows(q, n - q).norm();
        if q >= n || tail <= DEPENDENCE_TOL * d.norm() {
            return false;
        }
        for k in (q + 1..n).rev() {
            if d[k] == 0.0 {
                continue;
            }
            let (c, s, r) = givens(d[k - 1], d[k]);
            d[k - 1] = r;
            d[k] = 0.0;
            rotate_columns(&mut self.j, k - 1, k, c, s);
        }
        for k in 0..=q {
            self.r[(k, q)] = d[k];
        }
        true
    }

    /// Remove working-set column `k` out of `q`.
    fn drop_from_factor(&mut self, k: usize, q: usize) {
        for col in k..q - 1 {
            for row in 0..=col + 1 {
                self.r[(row, col)] = self.r[(row, col + 1)];
            }
        }
        for row in 0..q {
            self.r[(row, q - 1)] = 0.0;
        }
        for col in k..q - 1 {
            let (c, s, r) = givens(self.r[(col, col)], self.r[(col + 1, col)]);
            self.r[(col, col)] = r;
            self.r[(col + 1, col)] = 0.0;
            for cc in col + 1..q - 1 {
                let (x, y) = (self.r[(col, cc)], self.r[(col + 1, cc)]);
                self.r[(col, cc)] = c * x + s * y;
                self.r[(col + 1, cc)] = -s * x + c * y;
            }
            rotate_columns(&mut self.j, col, col + 1, c, s);
        }
    }

    /// `R⁻¹ d[..q]`
    fn solve_r(&self, d: &DVector<f64>, q: usize) -> DVector<f64> {
        let mut r = DVector::zeros(q);
        for i in (0..q).rev() {
            let mut acc = d[i];
            for k in i + 1..q {
                acc -= self.r[(i, k)] * r[k];
            }
            r[i] = acc / self.r[(i, i)];
        }
        r
    }

    /// `R⁻ᵀ v`
    fn solve_rt(&self, v: &DVector<f64>, q: usize) -> DVector<f64> {
        let mut w = DVector::zeros(q);
        for i in 0..q {
            let mut acc = v[i];
            for k in 0..i {
                acc -= self.r[(k, i)] * w[k];
            }
            w[i] = acc / self.r[(i, i)];
        }
        w
    }

    /// Minimizer with every working-set row held as an equality, and its
    /// multipliers.
    fn working_set_minimizer(
        &self,
        qp: &ParametricQp,
        act: &[usize],
        x0: &DVector<f64>,
        slack_of: &impl Fn(usize, &DVector<f64>) -> f64,
    ) -> (DVector<f64>, Vec<f64>) {
        let q = act.len();
        if q == 0 || qp.num_vars() == 0 {
            return (x0.clone(), vec![0.0; q]);
        }
        let v = DVector::from_iterator(q, act.iter().map(|&i| -slack_of(i, x0)));
        let w = self.solve_rt(&v, q);
        let x = x0 + self.j.columns(0, q) * &w;
        let u = self.solve_r(&w, q);
        (x, u.iter().copied().collect())
    }
}
