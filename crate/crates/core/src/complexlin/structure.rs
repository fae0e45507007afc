use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, GeomError, Result};
use crate::linalg::standard_complex_structure;
use crate::riemann::{directional_derivative, Christoffel, ConnectionCoeffs};

/// Step for the difference quotients behind ∂J and Lie brackets.
pub const BRACKET_STEP: f64 = 1e-4;

type MatrixFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// Matrix field J(x) on a 2n-dimensional chart with J² = −I.
#[derive(Clone)]
pub struct AlmostComplex {
    dim: usize,
    eval: Arc<MatrixFn>,
}

impl fmt::Debug for AlmostComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlmostComplex").field("dim", &self.dim).finish()
    }
}

impl AlmostComplex {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(invalid(format!("almost complex structures need even dimension, got {dim}")));
        }
        Ok(Self { dim, eval: Arc::new(f) })
    }

    /// Multiplication by i on ℂⁿ in interleaved coordinates (x₁, y₁, …).
    pub fn standard(n: usize) -> Self {
        let j = standard_complex_structure(n);
        Self { dim: 2 * n, eval: Arc::new(move |_| j.clone()) }
    }

    /// R(x) J₀ R(x)⁻¹ on ℝ⁴, with R the rotation of the (x₁, x₃)-plane by
    /// `strength`·(x₃ cos x₁ + x₄ sin x₂). Equal to J₀ on {x₃ = x₄ = 0}.
    pub fn twisted_r4(strength: f64) -> Self {
        let j0 = standard_complex_structure(2);
        Self {
            dim: 4,
            eval: Arc::new(move |x| {
                let a = strength * (x[2] * x[0].cos() + x[3] * x[1].sin());
                let (s, c) = a.sin_cos();
                let mut r = DMatrix::identity(4, 4);
                r[(0, 0)] = c;
                r[(0, 2)] = -s;
                r[(2, 0)] = s;
                r[(2, 2)] = c;
                &r * &j0 * r.transpose()
            }),
        }
    }

    /// Rotation by 90° on the unit sphere in polar coordinates (θ, φ):
    /// J∂_θ = ∂_φ / sin θ, J∂_φ = −sin θ ∂_θ.
    pub fn sphere_polar() -> Self {
        Self {
            dim: 2,
            eval: Arc::new(|x| {
                let s = x[0].sin();
                DMatrix::from_row_slice(2, 2, &[0.0, -s, 1.0 / s, 0.0])
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// J(x), checked against J² = −I.
    pub fn at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if x.len() != self.dim {
            return Err(invalid(format!("point has {} coordinates, J acts on dimension {}", x.len(), self.dim)));
        }
        let j = (self.eval)(x);
        if j.shape() != (self.dim, self.dim) {
            return Err(invalid("J evaluator returned a matrix of the wrong shape"));
        }
        let defect = (&j * &j + DMatrix::identity(self.dim, self.dim)).amax();
        if !(defect <= 1e-10 * j.norm_squared().max(1.0)) {
            return Err(GeomError::Numeric { node: 0, msg: format!("J² + I = {defect:e} at {x:?}") });
        }
        Ok(j)
    }

    /// ∂_vJ at x.
    pub fn derivative(&self, x: &[f64], v: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let f = &self.eval;
        let flat = directional_derivative(|y| DVector::from_column_slice(f(y).as_slice()), x, v, BRACKET_STEP);
        DMatrix::from_column_slice(n, n, flat.as_slice())
    }

    /// The vector field y ↦ J(y)X(y).
    pub fn apply_field<'a>(
        &'a self,
        field: &'a dyn Fn(&[f64]) -> DVector<f64>,
    ) -> impl Fn(&[f64]) -> DVector<f64> + 'a {
        move |y| (self.eval)(y) * field(y)
    }
}

/// [X, Y] = DY·X − DX·Y at x by centered differences with Richardson
/// extrapolation.
pub fn lie_bracket(
    x_field: &dyn Fn(&[f64]) -> DVector<f64>,
    y_field: &dyn Fn(&[f64]) -> DVector<f64>,
    x: &[f64],
    h: f64,
) -> DVector<f64> {
    let dy = directional_derivative(y_field, x, x_field(x).as_slice(), h);
    let dx = directional_derivative(x_field, x, y_field(x).as_slice(), h);
    dy - dx
}

/// A_J(v, w) from constant coordinate extensions of v and w:
/// ¼(J(∂_vJ)w − J(∂_wJ)v − (∂_{Jv}J)w + (∂_{Jw}J)v).
pub fn nijenhuis(j: &AlmostComplex, x: &[f64], v: &[f64], w: &[f64]) -> Result<DVector<f64>> {
    let jx = j.at(x)?;
    if v.len() != j.dim() || w.len() != j.dim() {
        return Err(invalid("Nijenhuis arguments must match the dimension of J"));
    }
    let (vv, ww) = (DVector::from_column_slice(v), DVector::from_column_slice(w));
    let (jv, jw) = (&jx * &vv, &jx * &ww);
    let a = &jx * j.derivative(x, v) * &ww - &jx * j.derivative(x, w) * &vv
        - j.derivative(x, jv.as_slice()) * &ww
        + j.derivative(x, jw.as_slice()) * &vv;
    Ok(a * 0.25)
}

/// (∇_vJ) = ∂_vJ + [Γ(v), J].
pub fn covariant_j(j: &AlmostComplex, conn: &ConnectionCoeffs, x: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
    let jx = j.at(x)?;
    let g = conn.at(x)?.contract(v);
    Ok(j.derivative(x, v) + &g * &jx - &jx * &g)
}

/// max_i |∇_{e_i}J| over coordinate directions.
pub fn covariant_j_residual(j: &AlmostComplex, conn: &ConnectionCoeffs, x: &[f64]) -> Result<f64> {
    let n = j.dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        worst = worst.max(covariant_j(j, conn, x, &e)?.amax());
    }
    Ok(worst)
}

/// ∇^J_Xξ = ∇_Xξ − ½J(∇_XJ)ξ, as Christoffel coefficients. For a
/// Levi-Civita ∇ this is also ½(∇_Xξ − J∇_X(Jξ)).
pub fn j_linear_connection(conn: &ConnectionCoeffs, j: &AlmostComplex) -> Result<ConnectionCoeffs> {
    let n = conn.dim();
    if j.dim() != n {
        return Err(invalid(format!("connection dimension {n} differs from J dimension {}", j.dim())));
    }
    let (conn, j) = (conn.clone(), j.clone());
    Ok(ConnectionCoeffs::try_user(n, move |x| {
        let jx = j.at(x)?;
        let gamma = conn.at(x)?;
        let mut blocks = Vec::with_capacity(n);
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let g = gamma.contract(&e);
            let nabla_j = j.derivative(x, &e) + &g * &jx - &jx * &g;
            blocks.push(g - &jx * nabla_j * 0.5);
        }
        Ok(Christoffel::from_fn(n, |k, i, l| blocks[i][(k, l)]))
    }))
}
