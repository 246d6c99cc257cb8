use nalgebra::{DMatrix, DVector};

/// Sparse matrix in coordinate form with a declared shape.
///
/// Duplicate coordinates are summed when densified or multiplied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, _, v)| v == 0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `self · x`
    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.nrows);
        for &(r, c, v) in &self.entries {
            out[r] += v * x[c];
        }
        out
    }

    /// `wᵀ · self · x`
    pub fn bilinear(&self, w: &DVector<f64>, x: &DVector<f64>) -> f64 {
        self.entries.iter().map(|&(r, c, v)| w[r] * v * x[c]).sum()
    }
}

/// Sparse vector with a declared length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    pub len: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVec {
    pub fn new(len: usize) -> Self {
        Self { len, entries: Vec::new() }
    }

    pub fn push(&mut self, index: usize, value: f64) {
        debug_assert!(index < self.len);
        if value != 0.0 {
            self.entries.push((index, value));
        }
    }

    pub fn to_dense(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.len);
        for &(i, x) in &self.entries {
            v[i] += x;
        }
        v
    }

    pub fn dot(&self, x: &DVector<f64>) -> f64 {
        self.entries.iter().map(|&(i, v)| v * x[i]).sum()
    }
}

/// Partial derivatives of every QP object with respect to one duration.
#[derive(Debug, Clone, PartialEq)]
pub struct QpPartials {
    pub dp: Triplets,
    pub dq: SparseVec,
    pub dc: f64,
    pub dg: Triplets,
    pub dh: SparseVec,
    pub dl: Triplets,
    pub dm: SparseVec,
    /// Partial of the cost factor `R`, used instead of `dp` when the QP
    /// carries one.
    pub dr: Triplets,
}

impl QpPartials {
    pub fn zeros(n: usize, m_ineq: usize, m_eq: usize) -> Self {
        Self {
            dp: Triplets::new(n, n),
            dq: SparseVec::new(n),
            dc: 0.0,
            dg: Triplets::new(m_ineq, n),
            dh: SparseVec::new(m_ineq),
            dl: Triplets::new(m_eq, n),
            dm: SparseVec::new(m_eq),
            dr: Triplets::new(0, n),
        }
    }
}

/// `min ½xᵀPx + qᵀx + c  s.t.  Gx ≤ h,  Lx = m` at one time allocation,
/// with one [`QpPartials`] per duration.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricQp {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub c: f64,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub l: DMatrix<f64>,
    pub m: DVector<f64>,
    pub partials: Vec<QpPartials>,
    /// Optional `R` with `P = RᵀR`; when present the objective is evaluated
    /// as `½‖Rx‖²`, which avoids cancellation in `xᵀPx`.
    pub cost_factor: Option<Triplets>,
}

impl ParametricQp {
    /// QP without duration partials. Shapes are checked with `assert!`.
    pub fn new(
        p: DMatrix<f64>,
        q: DVector<f64>,
        c: f64,
        g: DMatrix<f64>,
        h: DVector<f64>,
        l: DMatrix<f64>,
        m: DVector<f64>,
    ) -> Self {
        let n = q.len();
        assert_eq!(p.shape(), (n, n), "P must be N×N");
        assert_eq!(g.nrows(), h.len(), "G and h row counts differ");
        assert_eq!(l.nrows(), m.len(), "L and m row counts differ");
        assert!(g.nrows() == 0 || g.ncols() == n, "G must have N columns");
        assert!(l.nrows() == 0 || l.ncols() == n, "L must have N columns");
        let g = if g.nrows() == 0 { DMatrix::zeros(0, n) } else { g };
        let l = if l.nrows() == 0 { DMatrix::zeros(0, n) } else { l };
        Self { p, q, c, g, h, l, m, partials: Vec::new(), cost_factor: None }
    }

    pub fn with_partials(mut self, partials: Vec<QpPartials>) -> Self {
        for d in &partials {
            assert_eq!((d.dp.nrows, d.dp.ncols), self.p.shape());
            assert_eq!(d.dq.len, self.q.len());
            assert_eq!((d.dg.nrows, d.dg.ncols), self.g.shape());
            assert_eq!(d.dh.len, self.h.len());
            assert_eq!((d.dl.nrows, d.dl.ncols), self.l.shape());
            assert_eq!(d.dm.len, self.m.len());
        }
        self.partials = partials;
        self
    }

    pub fn with_cost_factor(mut self, r: Triplets) -> Self {
        assert_eq!(r.ncols, self.q.len(), "cost factor must have N columns");
        self.cost_factor = Some(r);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.q.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.h.len()
    }

    pub fn num_eq(&self) -> usize {
        self.m.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let quad = match &self.cost_factor {
            Some(r) => r.mul_vec(x).norm_squared(),
            None => x.dot(&(&self.p * x)),
        };
        0.5 * quad + self.q.dot(x) + self.c
    }
}
