use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::ode::{integrate, OdeOptions};
use super::path::PathCurve;
use crate::error::{invalid, GeomError, Result};
use crate::grids::RectGrid;
use crate::linalg::{flatten, g_norm, g_op_norm, op_norm, orthonormal_frame, unflatten, FiberScalar};
use crate::riemann::{form_curvature, ConnectionCoeffs, ConnectionForm, FiberMetric, MetricField};

/// A vector bundle over a Riemannian chart: connection form, fiber metric
/// in the same frame, and the base metric.
pub struct MetricBundle<T: 'static> {
    pub base: Arc<dyn MetricField>,
    pub connection: ConnectionForm<T>,
    pub fiber_metric: FiberMetric<T>,
}

impl<T> Clone for MetricBundle<T> {
    fn clone(&self) -> Self {
        Self { base: self.base.clone(), connection: self.connection.clone(), fiber_metric: self.fiber_metric.clone() }
    }
}

impl<T> fmt::Debug for MetricBundle<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricBundle").field("connection", &self.connection).finish()
    }
}

impl MetricBundle<f64> {
    /// TM with the given connection and fiber metric g.
    pub fn tangent(metric: Arc<dyn MetricField>, conn: &ConnectionCoeffs) -> Self {
        let g = metric.clone();
        Self { base: metric, connection: conn.form(), fiber_metric: Arc::new(move |x| g.eval(x)) }
    }
}

impl<T: FiberScalar> MetricBundle<T> {
    pub fn rank(&self) -> usize {
        self.connection.rank()
    }
}

#[derive(Debug, Clone)]
pub struct HolonomyResult<T: 'static> {
    /// Π in the bundle frame.
    pub transport: DMatrix<T>,
    /// |Π − I| in the fiber metric at the base point.
    pub defect: f64,
    /// Structural term of the bound: ∫∫|u_s||u_t| or min(‖dα‖₁, (b−a)‖dα‖₂²).
    pub structural: f64,
    pub curvature_constant: f64,
    pub bound: f64,
    pub ratio: f64,
    /// ‖dα‖₁ and (b−a)‖dα‖₂² for loops.
    pub loop_terms: Option<(f64, f64)>,
}

pub(crate) fn safe_ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Π(b) for Π′ = −θ(x′)Π, Π(a) = I.
pub fn transport_matrix<T: FiberScalar>(theta: &ConnectionForm<T>, path: &PathCurve) -> Result<DMatrix<T>> {
    if path.dim() != theta.base_dim() {
        return Err(invalid("path and connection live on charts of different dimension"));
    }
    let k = theta.rank();
    let (a, b) = path.interval();
    let opts = OdeOptions::default().with_h_max((b - a) / path.n_steps() as f64);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let pi = unflatten::<T>(k, k, y);
        let d = -(theta.at(&path.point(t), &path.velocity(t))? * pi);
        dy.copy_from_slice(&flatten(&d));
        Ok(())
    };
    let y = integrate(rhs, a, b, &flatten(&DMatrix::<T>::identity(k, k)), &opts, |t, y| {
        if y.iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(GeomError::Integration(format!("non-finite transport at t = {t}")))
        }
    })?;
    Ok(unflatten(k, k, &y))
}

/// Π_α v0.
pub fn parallel_transport<T: FiberScalar>(
    theta: &ConnectionForm<T>,
    path: &PathCurve,
    v0: &DVector<T>,
) -> Result<DVector<T>> {
    if v0.len() != theta.rank() {
        return Err(invalid("fiber vector has the wrong rank"));
    }
    Ok(transport_matrix(theta, path)? * v0)
}

type SurfaceFn = dyn Fn(f64, f64) -> Vec<f64> + Send + Sync;

/// Smooth map u: [a,b]×[c,d] → chart with its partial derivatives.
#[derive(Clone)]
pub struct SurfaceMap {
    pub pos: Arc<SurfaceFn>,
    pub d_s: Arc<SurfaceFn>,
    pub d_t: Arc<SurfaceFn>,
}

impl fmt::Debug for SurfaceMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SurfaceMap")
    }
}

impl SurfaceMap {
    pub fn new(
        pos: impl Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
        d_s: impl Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
        d_t: impl Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { pos: Arc::new(pos), d_s: Arc::new(d_s), d_t: Arc::new(d_t) }
    }

    /// Derivatives by centered differences of `pos`.
    pub fn from_position(pos: impl Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        let pos: Arc<SurfaceFn> = Arc::new(pos);
        let (p1, p2) = (pos.clone(), pos.clone());
        let h = 1e-4;
        let diff = move |a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, d: Vec<f64>| -> Vec<f64> {
            (0..a.len()).map(|i| (8.0 * (a[i] - b[i]) - (c[i] - d[i])) / (12.0 * h)).collect()
        };
        Self {
            pos,
            d_s: Arc::new(move |s, t| diff(p1(s + h, t), p1(s - h, t), p1(s + 2.0 * h, t), p1(s - 2.0 * h, t))),
            d_t: Arc::new(move |s, t| diff(p2(s, t + h), p2(s, t - h), p2(s, t + 2.0 * h), p2(s, t - 2.0 * h))),
        }
    }

    pub fn point(&self, s: f64, t: f64) -> Vec<f64> {
        (self.pos)(s, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
}

fn edge(u: &SurfaceMap, fixed: f64, lo: f64, hi: f64, along_s: bool, forward: bool, n_steps: usize) -> Result<PathCurve> {
    let (p, d) = (u.pos.clone(), if along_s { u.d_s.clone() } else { u.d_t.clone() });
    let param = move |tau: f64| if forward { tau } else { lo + hi - tau };
    let sign = if forward { 1.0 } else { -1.0 };
    let at = move |f: &SurfaceFn, tau: f64| {
        let r = param(tau);
        if along_s {
            f(r, fixed)
        } else {
            f(fixed, r)
        }
    };
    PathCurve::new(
        lo,
        hi,
        move |tau| at(&*p, tau),
        move |tau| at(&*d, tau).into_iter().map(|c| sign * c).collect(),
        n_steps,
    )
}

/// Transport around ∂([a,b]×[c,d]) starting and ending at u(a,c).
pub fn boundary_transport<T: FiberScalar>(
    u: &SurfaceMap,
    grid: &RectGrid,
    theta: &ConnectionForm<T>,
    orientation: Orientation,
    n_steps: usize,
) -> Result<DMatrix<T>> {
    let [a, b, c, d] = grid.bounds();
    let edges = match orientation {
        Orientation::CounterClockwise => [
            edge(u, c, a, b, true, true, n_steps)?,
            edge(u, b, c, d, false, true, n_steps)?,
            edge(u, d, a, b, true, false, n_steps)?,
            edge(u, a, c, d, false, false, n_steps)?,
        ],
        Orientation::Clockwise => [
            edge(u, a, c, d, false, true, n_steps)?,
            edge(u, d, a, b, true, true, n_steps)?,
            edge(u, b, c, d, false, false, n_steps)?,
            edge(u, c, a, b, true, false, n_steps)?,
        ],
    };
    let k = theta.rank();
    let mut pi = DMatrix::<T>::identity(k, k);
    for e in &edges {
        pi = transport_matrix(theta, e)? * pi;
    }
    Ok(pi)
}

/// sup over unit pairs of |R(v,w)|: exact for two-dimensional bases, the
/// Frobenius bound over an orthonormal frame otherwise.
pub fn curvature_norm<T: FiberScalar>(bundle: &MetricBundle<T>, x: &[f64]) -> Result<f64> {
    let base = orthonormal_frame(&bundle.base.eval(x), x)?;
    let fiber = orthonormal_frame(&(bundle.fiber_metric)(x), x)?;
    let fiber_inv = fiber
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::DegenerateMetric { point: x.to_vec() })?;
    let n = base.ncols();
    let mut sq = 0.0;
    let mut single = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let (e1, e2) = (base.column(i).into_owned(), base.column(j).into_owned());
            let r = form_curvature(&bundle.connection, x, e1.as_slice(), e2.as_slice())?;
            let norm = op_norm(&(&fiber_inv * r * &fiber));
            single = norm;
            sq += 2.0 * norm * norm;
        }
    }
    Ok(if n == 2 { single } else { sq.sqrt() })
}

/// Holonomy around ∂u against C_K ∫∫|u_s||u_t|, where C_K is k² times the
/// sup of the curvature norm over 10×10 cell centers.
pub fn rectangle_holonomy<T: FiberScalar>(
    u: &SurfaceMap,
    grid: &RectGrid,
    bundle: &MetricBundle<T>,
    n_steps: usize,
) -> Result<HolonomyResult<T>> {
    let [a, b, c, d] = grid.bounds();
    let pi = boundary_transport(u, grid, &bundle.connection, Orientation::CounterClockwise, n_steps)?;
    let x0 = u.point(a, c);
    let k = bundle.rank();
    let defect = g_op_norm(&(&pi - DMatrix::<T>::identity(k, k)), &(bundle.fiber_metric)(&x0), &x0)?;

    let mut sup: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let s = a + (i as f64 + 0.5) * (b - a) / 10.0;
            let t = c + (j as f64 + 0.5) * (d - c) / 10.0;
            sup = sup.max(curvature_norm(bundle, &u.point(s, t))?);
        }
    }
    let c_k = sup * (k * k) as f64;

    let mut integral = 0.0;
    for i in 0..grid.n_s() {
        for j in 0..grid.n_t() {
            let (s, t) = (grid.s(i), grid.t(j));
            let x = u.point(s, t);
            let g = bundle.base.eval(&x);
            let us = g_norm(&DVector::from_vec((u.d_s)(s, t)), &g);
            let ut = g_norm(&DVector::from_vec((u.d_t)(s, t)), &g);
            let w = grid_weight(grid, i, j);
            integral += w * us * ut;
        }
    }
    let bound = c_k * integral;
    Ok(HolonomyResult {
        transport: pi,
        defect,
        structural: integral,
        curvature_constant: c_k,
        bound,
        ratio: safe_ratio(defect, bound),
        loop_terms: None,
    })
}

fn grid_weight(grid: &RectGrid, i: usize, j: usize) -> f64 {
    let ws = if i == 0 || i + 1 == grid.n_s() { 0.5 } else { 1.0 };
    let wt = if j == 0 || j + 1 == grid.n_t() { 0.5 } else { 1.0 };
    ws * wt * grid.h_s() * grid.h_t()
}

/// Holonomy of a closed curve against C_K·min(‖dα‖₁, (b−a)‖dα‖₂²) with a
/// supplied constant.
pub fn loop_holonomy_bound<T: FiberScalar>(
    alpha: &PathCurve,
    bundle: &MetricBundle<T>,
    c_k: f64,
) -> Result<HolonomyResult<T>> {
    if !alpha.is_closed() {
        return Err(invalid("loop holonomy needs a closed curve"));
    }
    let pi = transport_matrix(&bundle.connection, alpha)?;
    let (a, b) = alpha.interval();
    let x0 = alpha.point(a);
    let k = bundle.rank();
    let defect = g_op_norm(&(&pi - DMatrix::<T>::identity(k, k)), &(bundle.fiber_metric)(&x0), &x0)?;
    let l1 = alpha.length(&*bundle.base);
    let l2 = (b - a) * alpha.energy(&*bundle.base);
    let structural = l1.min(l2);
    let bound = c_k * structural;
    Ok(HolonomyResult {
        transport: pi,
        defect,
        structural,
        curvature_constant: c_k,
        bound,
        ratio: safe_ratio(defect, bound),
        loop_terms: Some((l1, l2)),
    })
}
