use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, ComplexField, DMatrix, DVector};

use super::metric::{metric_derivative, MetricField};
use super::directional_derivative;
use crate::error::{invalid, GeomError, Result};

/// Γ^k_ij stored as `data[k*n*n + i*n + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut c = Self::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    c.data[(k * n + i) * n + j] = f(k, i, j);
                }
            }
        }
        c
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[(k * self.n + i) * self.n + j] = v;
    }

    /// Γ(v)^k_j = Σ_i Γ^k_ij v^i.
    pub fn contract(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |k, j| (0..n).map(|i| self.get(k, i, j) * v[i]).sum())
    }

    /// Γ(v, w)^k = Σ Γ^k_ij v^i w^j.
    pub fn apply(&self, v: &[f64], w: &[f64]) -> DVector<f64> {
        self.contract(v) * DVector::from_column_slice(w)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut d: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    d = d.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        d
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    LeviCivita,
    User,
    Perturbed,
}

type CoeffFn = dyn Fn(&[f64]) -> Result<Christoffel> + Send + Sync;

/// Connection on the tangent bundle of an n-dimensional chart.
#[derive(Clone)]
pub struct ConnectionCoeffs {
    dim: usize,
    eval: Arc<CoeffFn>,
    provenance: Provenance,
}

impl fmt::Debug for ConnectionCoeffs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionCoeffs")
            .field("dim", &self.dim)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl ConnectionCoeffs {
    pub fn levi_civita(metric: Arc<dyn MetricField>) -> Self {
        let dim = metric.dim();
        Self { dim, eval: Arc::new(move |x| christoffel(&*metric, x)), provenance: Provenance::LeviCivita }
    }

    pub fn flat(dim: usize) -> Self {
        Self::user(dim, move |_| Christoffel::zeros(dim))
    }

    pub fn user(dim: usize, f: impl Fn(&[f64]) -> Christoffel + Send + Sync + 'static) -> Self {
        Self { dim, eval: Arc::new(move |x| Ok(f(x))), provenance: Provenance::User }
    }

    /// Coefficients from a fallible evaluator.
    pub fn try_user(dim: usize, f: impl Fn(&[f64]) -> Result<Christoffel> + Send + Sync + 'static) -> Self {
        Self { dim, eval: Arc::new(f), provenance: Provenance::User }
    }

    /// Γ + δ for a tensor δ given in the same index layout.
    pub fn perturbed(&self, delta: impl Fn(&[f64]) -> Christoffel + Send + Sync + 'static) -> Self {
        let base = self.eval.clone();
        Self {
            dim: self.dim,
            eval: Arc::new(move |x| Ok(base(x)?.zip(&delta(x), |a, b| a + b))),
            provenance: Provenance::Perturbed,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn at(&self, x: &[f64]) -> Result<Christoffel> {
        (self.eval)(x)
    }

    /// The connection one-form in the coordinate frame.
    pub fn form(&self) -> ConnectionForm<f64> {
        let coeffs = self.clone();
        ConnectionForm::new(self.dim, self.dim, move |x, v| Ok(coeffs.at(x)?.contract(v)))
    }
}

type FormFn<T> = dyn Fn(&[f64], &[f64]) -> Result<DMatrix<T>> + Send + Sync;

/// Matrix-valued one-form θ on an m-dimensional chart, rank-n frame.
pub struct ConnectionForm<T: 'static> {
    rank: usize,
    base_dim: usize,
    eval: Arc<FormFn<T>>,
}

impl<T> Clone for ConnectionForm<T> {
    fn clone(&self) -> Self {
        Self { rank: self.rank, base_dim: self.base_dim, eval: self.eval.clone() }
    }
}

impl<T> fmt::Debug for ConnectionForm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionForm")
            .field("rank", &self.rank)
            .field("base_dim", &self.base_dim)
            .finish()
    }
}

impl<T> ConnectionForm<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    pub fn new(
        rank: usize,
        base_dim: usize,
        f: impl Fn(&[f64], &[f64]) -> Result<DMatrix<T>> + Send + Sync + 'static,
    ) -> Self {
        Self { rank, base_dim, eval: Arc::new(f) }
    }

    pub fn zero(rank: usize, base_dim: usize) -> Self {
        Self::new(rank, base_dim, move |_, _| Ok(DMatrix::zeros(rank, rank)))
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// θ_x(v).
    pub fn at(&self, x: &[f64], v: &[f64]) -> Result<DMatrix<T>> {
        (self.eval)(x, v)
    }

    /// The same connection in the frame e_a = Σ_j F^j_a f_j:
    /// θ' = F⁻¹ dF + F⁻¹ θ F.
    pub fn in_frame(
        &self,
        frame: impl Fn(&[f64]) -> DMatrix<T> + Send + Sync + 'static,
    ) -> Self {
        let base = self.clone();
        let rank = self.rank;
        let frame = Arc::new(frame);
        Self::new(rank, self.base_dim, move |x, v| {
            let f = frame(x);
            let inv = f
                .clone()
                .try_inverse()
                .ok_or_else(|| invalid("frame matrix is singular"))?;
            let fr = frame.clone();
            let df_flat = directional_derivative(
                move |y| {
                    let m = fr(y);
                    DVector::from_column_slice(m.as_slice())
                },
                x,
                v,
                1e-4,
            );
            let df = DMatrix::from_column_slice(rank, rank, df_flat.as_slice());
            Ok(&inv * df + &inv * base.at(x, v)? * f)
        })
    }
}

/// Frame-expressed fiber metric.
pub type FiberMetric<T> = Arc<dyn Fn(&[f64]) -> DMatrix<T> + Send + Sync>;

/// Γ^k_ij = ½ Σ_l g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij).
pub fn christoffel(g: &dyn MetricField, x: &[f64]) -> Result<Christoffel> {
    let n = g.dim();
    if x.len() != n {
        return Err(invalid(format!("point has {} coordinates, metric dim is {n}", x.len())));
    }
    let gx = g.eval(x);
    let scale = gx.norm().max(1.0);
    if (&gx - gx.transpose()).norm() > 1e-12 * scale {
        return Err(invalid("metric is not symmetric"));
    }
    let inv = Cholesky::new(gx)
        .ok_or_else(|| GeomError::DegenerateMetric { point: x.to_vec() })?
        .inverse();
    let dg: Vec<DMatrix<f64>> = (0..n).map(|i| metric_derivative(g, x, i)).collect();
    let mut lowered = Christoffel::zeros(n);
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                lowered.set(l, i, j, 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]));
            }
        }
    }
    let mut out = Christoffel::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|l| inv[(k, l)] * lowered.get(l, i, j)).sum();
                out.set(k, i, j, v);
            }
        }
    }
    Ok(out)
}

/// T(v,w)^k = Σ (Γ^k_ij − Γ^k_ji) v^i w^j.
pub fn torsion(conn: &ConnectionCoeffs, x: &[f64], v: &[f64], w: &[f64]) -> Result<DVector<f64>> {
    let c = conn.at(x)?;
    Ok(c.apply(v, w) - c.apply(w, v))
}

/// R(v,w) = ∂_vΓ(w) − ∂_wΓ(v) + [Γ(v), Γ(w)].
pub fn curvature(conn: &ConnectionCoeffs, x: &[f64], v: &[f64], w: &[f64]) -> Result<DMatrix<f64>> {
    form_curvature(&conn.form(), x, v, w)
}

/// Curvature of a connection one-form: ∂_vθ(w) − ∂_wθ(v) + [θ(v), θ(w)].
pub fn form_curvature<T>(theta: &ConnectionForm<T>, x: &[f64], v: &[f64], w: &[f64]) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let h = 1e-3;
    let along = |dir: &[f64], arg: &[f64]| -> Result<DMatrix<T>> {
        let at = |s: f64| -> Result<DMatrix<T>> {
            let y: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a + s * b).collect();
            theta.at(&y, arg)
        };
        let coarse = (at(h)? - at(-h)?) * T::from_real(0.5 / h);
        let fine = (at(0.5 * h)? - at(-0.5 * h)?) * T::from_real(1.0 / h);
        let d = (fine * T::from_real(4.0) - coarse) * T::from_real(1.0 / 3.0);
        if d.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::Numeric { node: 0, msg: "curvature difference quotient".into() });
        }
        Ok(d)
    };
    let (tv, tw) = (theta.at(x, v)?, theta.at(x, w)?);
    Ok(along(v, w)? - along(w, v)? + &tv * &tw - &tw * &tv)
}

/// g(R(e1,e2)e2, e1) / (|e1|²|e2|² − g(e1,e2)²).
pub fn sectional_curvature(
    conn: &ConnectionCoeffs,
    g: &dyn MetricField,
    x: &[f64],
    e1: &[f64],
    e2: &[f64],
) -> Result<f64> {
    let gx = g.eval(x);
    let (a, b) = (DVector::from_column_slice(e1), DVector::from_column_slice(e2));
    let r = curvature(conn, x, e1, e2)? * &b;
    let num = (a.transpose() * &gx * r)[(0, 0)];
    let ab = (a.transpose() * &gx * &b)[(0, 0)];
    let den = (a.transpose() * &gx * &a)[(0, 0)] * (b.transpose() * &gx * &b)[(0, 0)] - ab * ab;
    if den <= 0.0 {
        return Err(invalid("sectional curvature needs linearly independent vectors"));
    }
    Ok(num / den)
}

/// gθ + (gθ)^† − dg(v); vanishes iff θ is g-compatible at (x, v).
pub fn metric_compat_residual<T>(
    theta: &ConnectionForm<T>,
    g: &FiberMetric<T>,
    x: &[f64],
    v: &[f64],
) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = theta.rank();
    let gx = g(x);
    let gt = &gx * theta.at(x, v)?;
    let g2 = g.clone();
    let dg_flat = directional_derivative(
        move |y| DVector::from_column_slice(g2(y).as_slice()),
        x,
        v,
        1e-4,
    );
    let dg = DMatrix::from_column_slice(n, n, dg_flat.as_slice());
    Ok(&gt + gt.adjoint() - dg)
}

/// θ = Γ1 − Γ2 as a tensor-valued one-form.
pub fn connection_difference(a: &ConnectionCoeffs, b: &ConnectionCoeffs) -> Result<ConnectionForm<f64>> {
    if a.dim() != b.dim() {
        return Err(invalid(format!("dimension mismatch: {} vs {}", a.dim(), b.dim())));
    }
    let (a, b) = (a.clone(), b.clone());
    Ok(ConnectionForm::new(a.dim(), a.dim(), move |x, v| Ok(a.at(x)?.contract(v) - b.at(x)?.contract(v))))
}

/// ∇_vξ = dξ(v) + θ(v)ξ(x).
pub fn covariant_derivative<T>(
    theta: &ConnectionForm<T>,
    xi: impl Fn(&[f64]) -> DVector<T>,
    x: &[f64],
    v: &[f64],
) -> Result<DVector<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let value = xi(x);
    let d = directional_derivative(&xi, x, v, 1e-4);
    Ok(d + theta.at(x, v)? * value)
}

/// Splits w = (v, δ) at the fiber point (x, e) into (horizontal, vertical)
/// parts: (v, δ + θ(v)e).
pub fn horizontal_splitting<T>(
    theta: &ConnectionForm<T>,
    x: &[f64],
    e: &DVector<T>,
    v: &[f64],
    delta: &DVector<T>,
) -> Result<(Vec<f64>, DVector<T>)>
where
    T: ComplexField<RealField = f64> + Copy,
{
    Ok((v.to_vec(), delta + theta.at(x, v)? * e))
}
