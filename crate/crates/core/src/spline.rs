//! Bernstein-basis spline segments and the minimum-jerk cost form.
//!
//! A segment of degree `d` over duration `Δt` is stored as `d + 1` control
//! points in `D` dimensions. Evaluation uses the normalized parameter
//! `s = (t - t_start) / Δt ∈ [0, 1]`; each time derivative contributes a
//! factor `1 / Δt`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;

use crate::error::SplineError;

/// Degree used unless a problem asks for something else.
pub const DEFAULT_DEGREE: usize = 6;

/// One polynomial piece in Bernstein form.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierSegment {
    ctrl: DMatrix<f64>,
    duration: f64,
}

impl BezierSegment {
    /// `ctrl` is `(degree + 1) × dim`, one control point per row.
    pub fn new(ctrl: DMatrix<f64>, duration: f64) -> Result<Self, SplineError> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(SplineError::Duration(duration));
        }
        if ctrl.nrows() == 0 || ctrl.ncols() == 0 {
            return Err(SplineError::Shape("segment needs at least one control point and one dimension".into()));
        }
        Ok(Self { ctrl, duration })
    }

    pub fn degree(&self) -> usize {
        self.ctrl.nrows() - 1
    }

    pub fn dim(&self) -> usize {
        self.ctrl.ncols()
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn ctrl(&self) -> &DMatrix<f64> {
        &self.ctrl
    }

    /// Hodograph: the time derivative as a segment of one degree lower.
    pub fn derivative_ctrl(&self) -> Result<BezierSegment, SplineError> {
        let d = self.degree();
        if d == 0 {
            return Err(SplineError::Degree(0));
        }
        let scale = d as f64 / self.duration;
        let ctrl = DMatrix::from_fn(d, self.dim(), |j, k| scale * (self.ctrl[(j + 1, k)] - self.ctrl[(j, k)]));
        Ok(BezierSegment { ctrl, duration: self.duration })
    }

    /// Derivative of the given order at local parameter `s ∈ [0, 1]`.
    pub fn eval_local(&self, s: f64, order: usize) -> DVector<f64> {
        let d = self.degree();
        if order > d {
            return DVector::zeros(self.dim());
        }
        let mut pts = self.ctrl.clone();
        let mut rows = d + 1;
        for _ in 0..order {
            for j in 0..rows - 1 {
                for k in 0..self.dim() {
                    pts[(j, k)] = pts[(j + 1, k)] - pts[(j, k)];
                }
            }
            rows -= 1;
        }
        let falling = (0..order).fold(1.0, |acc, r| acc * (d - r) as f64);
        let scale = falling / self.duration.powi(order as i32);
        de_casteljau(&pts.rows(0, rows).into_owned(), s) * scale
    }

    /// Monomial coefficients in `s`: row `j` holds the coefficient of `s^j`.
    pub fn power_coefficients(&self) -> DMatrix<f64> {
        let d = self.degree();
        // c_j^{power} = C(d, j) Σ_i (-1)^{j-i} C(j, i) b_i
        DMatrix::from_fn(d + 1, self.dim(), |j, k| {
            let mut acc = 0.0;
            for i in 0..=j {
                let sign = if (j - i) % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binomial(j, i) * self.ctrl[(i, k)];
            }
            binomial(d, j) * acc
        })
    }
}

fn de_casteljau(pts: &DMatrix<f64>, s: f64) -> DVector<f64> {
    let mut work = pts.clone();
    let n = work.nrows();
    for level in 1..n {
        for j in 0..n - level {
            for k in 0..work.ncols() {
                work[(j, k)] = (1.0 - s) * work[(j, k)] + s * work[(j + 1, k)];
            }
        }
    }
    work.row(0).transpose()
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A piecewise Bézier curve with uniform degree and dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierSpline {
    segments: Vec<BezierSegment>,
}

impl BezierSpline {
    pub fn new(segments: Vec<BezierSegment>) -> Result<Self, SplineError> {
        let first = segments.first().ok_or_else(|| SplineError::Shape("spline needs at least one segment".into()))?;
        let (deg, dim) = (first.degree(), first.dim());
        if segments.iter().any(|s| s.degree() != deg || s.dim() != dim) {
            return Err(SplineError::Shape("segments must share degree and dimension".into()));
        }
        Ok(Self { segments })
    }

    /// Rebuild a spline from a flat coefficient vector laid out as
    /// `((segment * dim) + axis) * (degree + 1) + j`.
    pub fn from_flat(x: &DVector<f64>, durations: &[f64], degree: usize, dim: usize) -> Result<Self, SplineError> {
        let per = (degree + 1) * dim;
        if x.len() != per * durations.len() {
            return Err(SplineError::Shape(format!(
                "coefficient vector has {} entries, expected {}",
                x.len(),
                per * durations.len()
            )));
        }
        let segments = durations
            .iter()
            .enumerate()
            .map(|(i, &dt)| {
                let ctrl = DMatrix::from_fn(degree + 1, dim, |j, k| x[i * per + k * (degree + 1) + j]);
                BezierSegment::new(ctrl, dt)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(segments)
    }

    pub fn segments(&self) -> &[BezierSegment] {
        &self.segments
    }

    pub fn degree(&self) -> usize {
        self.segments[0].degree()
    }

    pub fn dim(&self) -> usize {
        self.segments[0].dim()
    }

    pub fn durations(&self) -> Vec<f64> {
        self.segments.iter().map(BezierSegment::duration).collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(BezierSegment::duration).sum()
    }

    /// Segment index and local parameter for time `t`. A knot belongs to
    /// the segment that starts there; the final knot to the last segment.
    pub fn locate(&self, t: f64) -> Result<(usize, f64), SplineError> {
        let total = self.total_duration();
        if !(0.0..=total).contains(&t) {
            return Err(SplineError::OutOfRange { t, total });
        }
        let mut start = 0.0;
        let last = self.segments.len() - 1;
        for (i, seg) in self.segments.iter().enumerate() {
            let end = start + seg.duration();
            if t < end || i == last {
                let s = ((t - start) / seg.duration()).clamp(0.0, 1.0);
                return Ok((i, s));
            }
            start = end;
        }
        unreachable!()
    }

    /// `order`-th time derivative at absolute time `t`.
    pub fn eval(&self, t: f64, order: usize) -> Result<DVector<f64>, SplineError> {
        let (i, s) = self.locate(t)?;
        Ok(self.segments[i].eval_local(s, order))
    }

    /// Total `∫‖x'''‖² dt` over all segments.
    pub fn jerk_cost(&self) -> Result<f64, SplineError> {
        let mut total = 0.0;
        for seg in &self.segments {
            let (q, _) = jerk_cost_matrix(seg.duration(), seg.degree())?;
            for k in 0..seg.dim() {
                let c = seg.ctrl().column(k);
                total += (c.transpose() * &q * c)[(0, 0)];
            }
        }
        Ok(total)
    }
}

fn q_bar_cache() -> &'static Mutex<HashMap<usize, Arc<DMatrix<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<DMatrix<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Duration-free jerk form `Q̄(d)` with `∫₀¹ (d³x/ds³)² ds = cᵀ Q̄ c`.
///
/// Entries are integrated exactly in rational arithmetic and cached per degree.
pub fn jerk_form(degree: usize) -> Result<Arc<DMatrix<f64>>, SplineError> {
    if degree < 3 {
        return Err(SplineError::Degree(degree));
    }
    if degree > 20 {
        // binomials in the Gram matrix would overflow i128 beyond this
        return Err(SplineError::Degree(degree));
    }
    let mut cache = q_bar_cache().lock().expect("jerk form cache poisoned");
    if let Some(q) = cache.get(&degree) {
        return Ok(Arc::clone(q));
    }
    let q = Arc::new(exact_jerk_form(degree));
    cache.insert(degree, Arc::clone(&q));
    Ok(q)
}

fn exact_jerk_form(d: usize) -> DMatrix<f64> {
    type Q = Ratio<i128>;
    let binom = |n: usize, k: usize| -> i128 {
        let mut acc: i128 = 1;
        for i in 0..k {
            acc = acc * (n - i) as i128 / (i + 1) as i128;
        }
        acc
    };
    let m = d - 3;
    // Gram matrix of degree-m Bernstein polynomials on [0, 1]
    let gram =
        |a: usize, b: usize| -> Q { Q::new(binom(m, a) * binom(m, b), (2 * m as i128 + 1) * binom(2 * m, a + b)) };
    // third forward difference: Δ³c_a = Σ_l (-1)^{3-l} C(3,l) c_{a+l}
    let diff = |a: usize, j: usize| -> i128 {
        if j < a || j > a + 3 {
            return 0;
        }
        let l = j - a;
        let sign = if (3 - l) % 2 == 0 { 1 } else { -1 };
        sign * binom(3, l)
    };
    let k = (d * (d - 1) * (d - 2)) as i128;
    let mut out = DMatrix::zeros(d + 1, d + 1);
    for i in 0..=d {
        for j in 0..=d {
            let mut acc = Q::from_integer(0);
            for a in 0..=m {
                let da = diff(a, i);
                if da == 0 {
                    continue;
                }
                for b in 0..=m {
                    let db = diff(b, j);
                    if db != 0 {
                        acc += gram(a, b) * Q::from_integer(da * db);
                    }
                }
            }
            acc *= Q::from_integer(k * k);
            out[(i, j)] = *acc.numer() as f64 / *acc.denom() as f64;
        }
    }
    out
}

/// Per-coordinate jerk cost `Q = Δt⁻⁵ Q̄(d)` and its exact derivative
/// `∂Q/∂Δt = -5 Δt⁻⁶ Q̄(d)`.
pub fn jerk_cost_matrix(dt: f64, degree: usize) -> Result<(DMatrix<f64>, DMatrix<f64>), SplineError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SplineError::Duration(dt));
    }
    let q_bar = jerk_form(degree)?;
    let q = q_bar.as_ref() * dt.powi(-5);
    let dq = q_bar.as_ref() * (-5.0 * dt.powi(-6));
    Ok((q, dq))
}

fn factor_cache() -> &'static Mutex<HashMap<usize, Arc<DMatrix<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<DMatrix<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `F` with `FᵀF = Q̄(d)`: third differences weighted by the Cholesky factor
/// of the degree `d − 3` Bernstein Gram matrix, `(d − 2) × (d + 1)`.
///
/// `‖F c‖²` evaluates the jerk integral without the cancellation that
/// `cᵀ Q̄ c` suffers when the curve is far from the origin.
pub fn jerk_factor(degree: usize) -> Result<Arc<DMatrix<f64>>, SplineError> {
    jerk_form(degree)?;
    let mut cache = factor_cache().lock().expect("jerk factor cache poisoned");
    if let Some(f) = cache.get(&degree) {
        return Ok(Arc::clone(f));
    }
    let d = degree;
    let m = d - 3;
    let gram = DMatrix::from_fn(m + 1, m + 1, |a, b| {
        binomial(m, a) * binomial(m, b) / ((2 * m + 1) as f64 * binomial(2 * m, a + b))
    });
    let lower = gram.cholesky().expect("Bernstein Gram matrix is positive definite").l();
    let mut diff = DMatrix::zeros(m + 1, d + 1);
    for a in 0..=m {
        for l in 0..=3 {
            let sign = if (3 - l) % 2 == 0 { 1.0 } else { -1.0 };
            diff[(a, a + l)] = sign * binomial(3, l);
        }
    }
    let k = (d * (d - 1) * (d - 2)) as f64;
    let f = Arc::new(lower.transpose() * diff * k);
    cache.insert(degree, Arc::clone(&f));
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_segment(rng: &mut ChaCha8Rng, degree: usize, dim: usize, dt: f64) -> BezierSegment {
        let ctrl = DMatrix::from_fn(degree + 1, dim, |_, _| rng.gen_range(-2.0..2.0));
        BezierSegment::new(ctrl, dt).unwrap()
    }

    #[test]
    fn jerk_factor_reproduces_the_form() {
        for d in 3..=10 {
            let f = jerk_factor(d).unwrap();
            let q = jerk_form(d).unwrap();
            let err = (f.transpose() * f.as_ref() - q.as_ref()).amax();
            assert!(err <= 1e-12 * q.amax(), "degree {d}: {err}");
        }
    }

    #[test]
    fn constant_curve_evaluates_to_its_point() {
        let p = [1.5, -2.0, 0.25];
        let ctrl = DMatrix::from_fn(7, 3, |_, k| p[k]);
        let spline = BezierSpline::new(vec![BezierSegment::new(ctrl, 2.0).unwrap()]).unwrap();
        for t in [0.0, 0.3, 1.0, 2.0] {
            let v = spline.eval(t, 0).unwrap();
            for k in 0..3 {
                assert_eq!(v[k], p[k]);
            }
        }
    }

    #[test]
    fn evenly_spaced_points_give_constant_velocity() {
        let (a, b) = (DVector::from_vec(vec![0.0, 1.0, -1.0]), DVector::from_vec(vec![3.0, -1.0, 2.0]));
        let ctrl = DMatrix::from_fn(7, 3, |j, k| a[k] + (b[k] - a[k]) * j as f64 / 6.0);
        let spline = BezierSpline::new(vec![BezierSegment::new(ctrl, 1.0).unwrap()]).unwrap();
        for t in [0.0, 0.2, 0.77, 1.0] {
            let v = spline.eval(t, 1).unwrap();
            assert!((v - (&b - &a)).amax() < 1e-12);
        }
    }

    #[test]
    fn third_derivative_matches_five_point_stencil() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let seg = random_segment(&mut rng, 6, 3, 1.3);
        let spline = BezierSpline::new(vec![seg]).unwrap();
        let h = 1e-5;
        let t = 0.37;
        // central 5-point stencil on the analytic second derivative
        let acc = |t: f64| spline.eval(t, 2).unwrap();
        let fd = (acc(t - 2.0 * h) - acc(t - h) * 8.0 + acc(t + h) * 8.0 - acc(t + 2.0 * h)) / (12.0 * h);
        let exact = spline.eval(t, 3).unwrap();
        for k in 0..3 {
            let rel = (fd[k] - exact[k]).abs() / exact[k].abs().max(1.0);
            assert!(rel < 1e-6, "axis {k}: fd {} vs {}", fd[k], exact[k]);
        }
    }

    #[test]
    fn derivative_of_constant_segment_is_zero() {
        let seg = BezierSegment::new(DMatrix::from_element(7, 2, 4.0), 0.5).unwrap();
        let d = seg.derivative_ctrl().unwrap();
        assert_eq!(d.degree(), 5);
        assert!(d.ctrl().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_segment_hodograph() {
        let seg = BezierSegment::new(DMatrix::from_row_slice(2, 1, &[0.0, 2.0]), 2.0).unwrap();
        let d = seg.derivative_ctrl().unwrap();
        assert_eq!(d.degree(), 0);
        assert_eq!(d.ctrl()[(0, 0)], 1.0);
    }

    #[test]
    fn degree_zero_has_no_hodograph() {
        let seg = BezierSegment::new(DMatrix::from_element(1, 1, 1.0), 1.0).unwrap();
        assert!(matches!(seg.derivative_ctrl(), Err(SplineError::Degree(0))));
    }

    #[test]
    fn hodograph_agrees_with_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seg = random_segment(&mut rng, 6, 3, 0.7);
        let hodo = seg.derivative_ctrl().unwrap();
        let acc = hodo.derivative_ctrl().unwrap();
        for s in [0.0, 0.1, 0.5, 0.93, 1.0] {
            assert!((hodo.eval_local(s, 0) - seg.eval_local(s, 1)).amax() < 1e-10);
            assert!((acc.eval_local(s, 0) - seg.eval_local(s, 2)).amax() < 1e-9);
        }
    }

    #[test]
    fn eval_rejects_times_outside_the_spline() {
        let seg = BezierSegment::new(DMatrix::from_element(7, 3, 0.0), 1.0).unwrap();
        let spline = BezierSpline::new(vec![seg]).unwrap();
        assert!(matches!(spline.eval(-1e-9, 0), Err(SplineError::OutOfRange { .. })));
        assert!(matches!(spline.eval(1.0 + 1e-9, 0), Err(SplineError::OutOfRange { .. })));
    }

    #[test]
    fn knot_belongs_to_the_following_segment() {
        let a = BezierSegment::new(DMatrix::from_element(4, 1, 0.0), 1.0).unwrap();
        let b = BezierSegment::new(DMatrix::from_element(4, 1, 1.0), 2.0).unwrap();
        let spline = BezierSpline::new(vec![a, b]).unwrap();
        assert_eq!(spline.locate(1.0).unwrap(), (1, 0.0));
        assert_eq!(spline.locate(3.0).unwrap(), (1, 1.0));
        assert_eq!(spline.eval(1.0, 0).unwrap()[0], 1.0);
    }

    #[test]
    fn zero_duration_is_rejected() {
        assert!(BezierSegment::new(DMatrix::zeros(7, 3), 0.0).is_err());
        assert!(jerk_cost_matrix(0.0, 6).is_err());
        assert!(jerk_cost_matrix(-1.0, 6).is_err());
        assert!(jerk_cost_matrix(1.0, 2).is_err());
    }

    #[test]
    fn quadratic_has_zero_jerk_cost() {
        // c_j = p(j/d) for a quadratic p, which lies in the Bernstein span exactly
        // only through degree elevation; use elevated control points.
        let d = 6;
        let quad = [1.0, -3.0, 2.0]; // Bernstein degree-2 control points
        let mut pts: Vec<f64> = quad.to_vec();
        for deg in 2..d {
            let mut next = vec![0.0; deg + 2];
            for j in 0..=deg + 1 {
                let left = if j > 0 { pts[j - 1] } else { 0.0 };
                let right = if j <= deg { pts[j] } else { 0.0 };
                let w = j as f64 / (deg + 1) as f64;
                next[j] = w * left + (1.0 - w) * right;
            }
            pts = next;
        }
        let c = DVector::from_vec(pts);
        let (q, _) = jerk_cost_matrix(0.9, d).unwrap();
        let cost = (c.transpose() * &q * &c)[(0, 0)];
        assert!(cost.abs() < 1e-9, "cost {cost}");
    }

    #[test]
    fn doubling_duration_scales_by_two_to_minus_five() {
        let (q1, _) = jerk_cost_matrix(0.8, 6).unwrap();
        let (q2, _) = jerk_cost_matrix(1.6, 6).unwrap();
        for (a, b) in q1.iter().zip(q2.iter()) {
            assert!((b - a / 32.0).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    /// Gauss–Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    }

    #[test]
    fn jerk_cost_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dt = 0.8;
        let seg = random_segment(&mut rng, 6, 1, dt);
        let c = seg.ctrl().column(0).into_owned();
        let (q, _) = jerk_cost_matrix(dt, 6).unwrap();
        let exact = (c.transpose() * &q * &c)[(0, 0)];
        let quad: f64 = gauss_legendre(32)
            .into_iter()
            .map(|(x, w)| {
                let s = 0.5 * (x + 1.0);
                let j = seg.eval_local(s, 3)[0];
                w * j * j * 0.5 * dt
            })
            .sum();
        assert!((exact - quad).abs() / quad.abs() < 1e-9, "{exact} vs {quad}");
    }

    #[test]
    fn duration_derivative_matches_central_difference() {
        let h = 1e-6;
        for &dt in &[0.1, 0.35, 1.0, 4.2, 10.0] {
            let (_, dq) = jerk_cost_matrix(dt, 6).unwrap();
            let (qp, _) = jerk_cost_matrix(dt + h, 6).unwrap();
            let (qm, _) = jerk_cost_matrix(dt - h, 6).unwrap();
            let fd = (qp - qm) / (2.0 * h);
            let scale = dq.amax();
            assert!((fd - &dq).amax() / scale < 1e-6, "dt = {dt}");
        }
    }

    #[test]
    fn power_basis_matches_bernstein() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let seg = random_segment(&mut rng, 6, 2, 1.0);
        let pc = seg.power_coefficients();
        for s in [0.0, 0.21, 0.5, 1.0] {
            let v = seg.eval_local(s, 0);
            for k in 0..2 {
                let p: f64 = (0..7).map(|j| pc[(j, k)] * s.powi(j as i32)).sum();
                assert!((p - v[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_time_scaling_of_spline_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let durs = [0.4, 1.1, 0.7];
        let x = DVector::from_fn(3 * 21, |_, _| rng.gen_range(-1.0..1.0));
        let base = BezierSpline::from_flat(&x, &durs, 6, 3).unwrap().jerk_cost().unwrap();
        for s in [0.5, 2.0, 3.0] {
            let scaled: Vec<f64> = durs.iter().map(|d| d * s).collect();
            let j = BezierSpline::from_flat(&x, &scaled, 6, 3).unwrap().jerk_cost().unwrap();
            assert!((j - base * s.powi(-5)).abs() <= 1e-12 * base);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn stays_in_control_point_bounding_box(seed in any::<u64>(), dt in 0.1f64..5.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let seg = random_segment(&mut rng, 6, 3, dt);
                for k in 0..3 {
                    let col = seg.ctrl().column(k);
                    let (lo, hi) = (col.min(), col.max());
                    for i in 0..=1000 {
                        let v = seg.eval_local(i as f64 / 1000.0, 0)[k];
                        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                    }
                }
            }

            #[test]
            fn interpolates_endpoints(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let seg = random_segment(&mut rng, 6, 3, 1.0);
                prop_assert!((seg.eval_local(0.0, 0) - seg.ctrl().row(0).transpose()).amax() < 1e-14);
                prop_assert!((seg.eval_local(1.0, 0) - seg.ctrl().row(6).transpose()).amax() < 1e-14);
            }
        }
    }
}
