use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::forms::OneForm;
use super::structure::{covariant_j, j_linear_connection, lie_bracket, AlmostComplex, BRACKET_STEP};
use crate::error::{invalid, GeomError, Result};
use crate::grids::{CircleGrid, Grid};
use crate::riemann::{directional_derivative, ConnectionCoeffs};

type ParamFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A vector field given by its values at points of a domain.
pub type VectorField<'a> = &'a dyn Fn(&[f64]) -> DVector<f64>;

/// A J-holomorphic parametrization φ: U ⊂ ℂ → M of a surface Σ, sampled on
/// the circle |z − center| = radius.
#[derive(Clone)]
pub struct HolomorphicPatch {
    dim: usize,
    param: Arc<ParamFn>,
    center: [f64; 2],
    radius: f64,
    grid: Arc<Grid>,
}

impl fmt::Debug for HolomorphicPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HolomorphicPatch")
            .field("dim", &self.dim)
            .field("center", &self.center)
            .field("radius", &self.radius)
            .finish()
    }
}

impl HolomorphicPatch {
    pub fn new(
        dim: usize,
        param: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        center: [f64; 2],
        radius: f64,
        circle: CircleGrid,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(invalid("circle radius must be positive"));
        }
        if param(&center).len() != dim {
            return Err(invalid("parametrization has the wrong target dimension"));
        }
        Ok(Self { dim, param: Arc::new(param), center, radius, grid: Arc::new(circle.into()) })
    }

    /// z ↦ (x, y, 0, …, 0).
    pub fn coordinate_plane(dim: usize, center: [f64; 2], radius: f64, circle: CircleGrid) -> Result<Self> {
        if dim < 2 {
            return Err(invalid("target must have dimension at least 2"));
        }
        Self::new(
            dim,
            move |z| {
                let mut p = vec![0.0; dim];
                p[0] = z[0];
                p[1] = z[1];
                p
            },
            center,
            radius,
            circle,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Parameter of node k.
    pub fn node_param(&self, k: usize) -> [f64; 2] {
        let c = self.grid.node(k).cart;
        [self.center[0] + self.radius * c[0], self.center[1] + self.radius * c[1]]
    }

    pub fn point(&self, z: &[f64]) -> Vec<f64> {
        (self.param)(z)
    }

    /// (dφ(∂_x), dφ(∂_y)) at z.
    pub fn tangents(&self, z: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let f = |w: &[f64]| DVector::from_vec((self.param)(w));
        (
            directional_derivative(f, z, &[1.0, 0.0], BRACKET_STEP),
            directional_derivative(f, z, &[0.0, 1.0], BRACKET_STEP),
        )
    }
}

fn torsion_free_at(conn: &ConnectionCoeffs, x: &[f64]) -> Result<crate::riemann::Christoffel> {
    let gamma = conn.at(x)?;
    let defect = gamma.symmetry_defect();
    if defect > 1e-10 {
        return Err(GeomError::InvalidConnection(format!("torsion {defect:e} at {x:?}")));
    }
    Ok(gamma)
}

/// D_{J;Σ}ξ = ½(∇ξ + J∘∇ξ∘j) − ½J(∇_ξJ) on the sampled circle of a
/// J-holomorphic patch. ξ is a vector field along φ, given as a function of
/// the parameter z.
pub fn d_js_operator(
    j: &AlmostComplex,
    conn: &ConnectionCoeffs,
    patch: &HolomorphicPatch,
    xi: VectorField<'_>,
) -> Result<OneForm> {
    let n = patch.dim();
    if j.dim() != n || conn.dim() != n {
        return Err(invalid("J, connection and patch dimensions differ"));
    }
    let grid = patch.grid().clone();
    let mut out = Vec::with_capacity(grid.node_count());
    for k in 0..grid.node_count() {
        let z = patch.node_param(k);
        let x = patch.point(&z);
        let jx = j.at(&x)?;
        let (ex, ey) = patch.tangents(&z);
        let mismatch = (&jx * &ex - &ey).norm();
        if mismatch > 1e-7 * (1.0 + ex.norm()) {
            return Err(invalid(format!("patch is not J-holomorphic at node {k}: |J φ_x − φ_y| = {mismatch:e}")));
        }
        let gamma = torsion_free_at(conn, &x)?;
        let value = xi(&z);
        let nabla = |e: &DVector<f64>, dir: [f64; 2]| -> DVector<f64> {
            directional_derivative(xi, &z, &dir, BRACKET_STEP) + gamma.contract(e.as_slice()) * &value
        };
        let (nx, ny) = (nabla(&ex, [1.0, 0.0]), nabla(&ey, [0.0, 1.0]));
        let nj = covariant_j(j, conn, &x, value.as_slice())?;
        let vx = (&nx + &jx * &ny) * 0.5 - &jx * &nj * &ex * 0.5;
        let vy = (&ny - &jx * &nx) * 0.5 - &jx * &nj * &ey * 0.5;
        out.push((vx, vy));
    }
    OneForm::from_nodes(grid, n, out)
}

/// ½([ζ, ξ] + J[Jζ, ξ]) at x.
pub fn d_js_bracket_form(j: &AlmostComplex, zeta: VectorField<'_>, xi: VectorField<'_>, x: &[f64]) -> Result<DVector<f64>> {
    let jx = j.at(x)?;
    let j_zeta = j.apply_field(zeta);
    let a = lie_bracket(zeta, xi, x, BRACKET_STEP);
    let b = lie_bracket(&j_zeta, xi, x, BRACKET_STEP);
    Ok((a + jx * b) * 0.5)
}

/// ¼([ζ, ξ] + J[Jζ, ξ] − J[ζ, Jξ] + [Jζ, Jξ]) at x.
pub fn d_js_four_bracket(j: &AlmostComplex, zeta: VectorField<'_>, xi: VectorField<'_>, x: &[f64]) -> Result<DVector<f64>> {
    let jx = j.at(x)?;
    let j_zeta = j.apply_field(zeta);
    let j_xi = j.apply_field(xi);
    let h = BRACKET_STEP;
    let sum = lie_bracket(zeta, xi, x, h) + &jx * lie_bracket(&j_zeta, xi, x, h) - &jx * lie_bracket(zeta, &j_xi, x, h)
        + lie_bracket(&j_zeta, &j_xi, x, h);
    Ok(sum * 0.25)
}

/// ∂̄_{∇^J}ξ(X) − ¼((∇_{Jξ}J) + J(∇_ξJ))X at x, for a torsion-free ∇.
pub fn dbar_jlinear_corrected(
    j: &AlmostComplex,
    conn: &ConnectionCoeffs,
    xi: VectorField<'_>,
    x: &[f64],
    big_x: &[f64],
) -> Result<DVector<f64>> {
    torsion_free_at(conn, x)?;
    let jx = j.at(x)?;
    let cj = j_linear_connection(conn, j)?.at(x)?;
    let value = xi(x);
    let xv = DVector::from_column_slice(big_x);
    let jxv = &jx * &xv;
    let nabla = |e: &DVector<f64>| directional_derivative(xi, x, e.as_slice(), BRACKET_STEP) + cj.contract(e.as_slice()) * &value;
    let dbar = (nabla(&xv) + &jx * nabla(&jxv)) * 0.5;
    let j_value = &jx * &value;
    let corr: DMatrix<f64> = covariant_j(j, conn, x, j_value.as_slice())? + &jx * covariant_j(j, conn, x, value.as_slice())?;
    Ok(dbar - corr * xv * 0.25)
}
