use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::structure::AlmostComplex;
use crate::error::{invalid, GeomError, Result};
use crate::grids::{Grid, GridFunction};
use crate::linalg::{complex_to_real, real_to_complex, realify};
use crate::riemann::ConnectionForm;

/// The domain complex structure: rotation by 90°, j∂_x = ∂_y.
pub fn rotate(v: &[f64]) -> [f64; 2] {
    [-v[1], v[0]]
}

fn check_planar(grid: &Grid) -> Result<()> {
    if grid.n_axes() != 2 {
        return Err(invalid("maps and forms need a two-dimensional domain grid"));
    }
    Ok(())
}

fn check_finite(f: &GridFunction, what: &str) -> Result<()> {
    let d = f.dim();
    match f.values().iter().position(|v| !v.is_finite()) {
        Some(i) => Err(GeomError::Numeric { node: i / d, msg: format!("non-finite {what}") }),
        None => Ok(()),
    }
}

/// A map u from a planar grid domain into a chart, with its partials.
#[derive(Debug, Clone)]
pub struct MapU {
    values: GridFunction,
    dx: GridFunction,
    dy: GridFunction,
}

impl MapU {
    /// Samples u and differentiates on the grid.
    pub fn sample(grid: Arc<Grid>, dim: usize, f: impl Fn(&[f64; 2]) -> Vec<f64>) -> Result<Self> {
        check_planar(&grid)?;
        let values = GridFunction::sample(grid, dim, |node, out| out.copy_from_slice(&f(&node.cart)));
        let (dx, dy) = values.cartesian_gradient()?;
        Self::from_parts(values, dx, dy)
    }

    /// Samples u together with analytic partials ∂_x u, ∂_y u.
    pub fn with_derivatives(
        grid: Arc<Grid>,
        dim: usize,
        f: impl Fn(&[f64; 2]) -> Vec<f64>,
        fx: impl Fn(&[f64; 2]) -> Vec<f64>,
        fy: impl Fn(&[f64; 2]) -> Vec<f64>,
    ) -> Result<Self> {
        check_planar(&grid)?;
        let s = |g: &dyn Fn(&[f64; 2]) -> Vec<f64>| {
            GridFunction::sample(grid.clone(), dim, |node, out| out.copy_from_slice(&g(&node.cart)))
        };
        Self::from_parts(s(&f), s(&fx), s(&fy))
    }

    pub fn from_parts(values: GridFunction, dx: GridFunction, dy: GridFunction) -> Result<Self> {
        check_planar(values.grid())?;
        for d in [&dx, &dy] {
            if d.dim() != values.dim() || !Arc::ptr_eq(d.grid(), values.grid()) {
                return Err(invalid("map derivatives live on a different grid or dimension"));
            }
        }
        check_finite(&values, "map value")?;
        check_finite(&dx, "map derivative")?;
        check_finite(&dy, "map derivative")?;
        Ok(Self { values, dx, dy })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.values.grid()
    }

    /// Target dimension.
    pub fn dim(&self) -> usize {
        self.values.dim()
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn dx(&self) -> &GridFunction {
        &self.dx
    }

    pub fn dy(&self) -> &GridFunction {
        &self.dy
    }

    pub fn point(&self, node: usize) -> &[f64] {
        self.values.at(node)
    }

    /// (du(∂_x), du(∂_y)) at a node.
    pub fn du(&self, node: usize) -> (DVector<f64>, DVector<f64>) {
        (DVector::from_column_slice(self.dx.at(node)), DVector::from_column_slice(self.dy.at(node)))
    }

    /// Pointwise Frobenius norm |du|.
    pub fn du_norm(&self) -> Vec<f64> {
        self.dx.pointwise_norm().iter().zip(self.dy.pointwise_norm()).map(|(a, b)| a.hypot(b)).collect()
    }
}

/// Values ξ(z) of a section of u*E, one fiber vector per node.
#[derive(Debug, Clone)]
pub struct SectionAlongU {
    map: Arc<MapU>,
    values: GridFunction,
}

impl SectionAlongU {
    pub fn new(map: Arc<MapU>, values: GridFunction) -> Result<Self> {
        if !Arc::ptr_eq(map.grid(), values.grid()) {
            return Err(invalid("section and map live on different grids"));
        }
        Ok(Self { map, values })
    }

    /// ξ(z) = f(z, u(z)).
    pub fn sample(map: Arc<MapU>, dim: usize, f: impl Fn(&[f64; 2], &[f64]) -> Vec<f64>) -> Self {
        let values = GridFunction::sample(map.grid().clone(), dim, |node, out| {
            out.copy_from_slice(&f(&node.cart, map.point(node.index)))
        });
        Self { map, values }
    }

    pub fn zeros(map: Arc<MapU>, dim: usize) -> Self {
        let values = GridFunction::zeros(map.grid().clone(), dim);
        Self { map, values }
    }

    pub fn map(&self) -> &Arc<MapU> {
        &self.map
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.dim()
    }

    pub fn at(&self, node: usize) -> DVector<f64> {
        DVector::from_column_slice(self.values.at(node))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { map: self.map.clone(), values: self.values.scaled(s) }
    }

    /// Partials of the coefficient vector along ∂_x, ∂_y.
    pub fn partials(&self) -> Result<(GridFunction, GridFunction)> {
        self.values.cartesian_gradient()
    }
}

/// A one-form on the domain with vector values, stored by its values on
/// ∂_x and ∂_y.
#[derive(Debug, Clone)]
pub struct OneForm {
    dx: GridFunction,
    dy: GridFunction,
}

impl OneForm {
    pub fn new(dx: GridFunction, dy: GridFunction) -> Result<Self> {
        if dx.dim() != dy.dim() || !Arc::ptr_eq(dx.grid(), dy.grid()) {
            return Err(invalid("form components live on different grids or dimensions"));
        }
        Ok(Self { dx, dy })
    }

    pub fn zeros(grid: Arc<Grid>, dim: usize) -> Self {
        Self { dx: GridFunction::zeros(grid.clone(), dim), dy: GridFunction::zeros(grid, dim) }
    }

    pub(crate) fn from_nodes(grid: Arc<Grid>, dim: usize, values: Vec<(DVector<f64>, DVector<f64>)>) -> Result<Self> {
        let mut dx = Vec::with_capacity(values.len() * dim);
        let mut dy = Vec::with_capacity(values.len() * dim);
        for (a, b) in &values {
            dx.extend_from_slice(a.as_slice());
            dy.extend_from_slice(b.as_slice());
        }
        Self::new(GridFunction::new(grid.clone(), dim, dx)?, GridFunction::new(grid, dim, dy)?)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.dx.grid()
    }

    pub fn dim(&self) -> usize {
        self.dx.dim()
    }

    /// η(∂_x).
    pub fn dx(&self) -> &GridFunction {
        &self.dx
    }

    /// η(∂_y).
    pub fn dy(&self) -> &GridFunction {
        &self.dy
    }

    pub fn at(&self, node: usize) -> (DVector<f64>, DVector<f64>) {
        (DVector::from_column_slice(self.dx.at(node)), DVector::from_column_slice(self.dy.at(node)))
    }

    /// η∘j.
    pub fn compose_j(&self) -> Self {
        Self { dx: self.dy.clone(), dy: self.dx.scaled(-1.0) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self { dx: self.dx.add(&other.dx)?, dy: self.dy.add(&other.dy)? })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self { dx: self.dx.sub(&other.dx)?, dy: self.dy.sub(&other.dy)? })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { dx: self.dx.scaled(s), dy: self.dy.scaled(s) }
    }

    /// f·η for a scalar grid function f.
    pub fn multiply(&self, f: &GridFunction) -> Result<Self> {
        if f.dim() != 1 || !Arc::ptr_eq(f.grid(), self.grid()) {
            return Err(invalid("multiplier must be a scalar function on the form's grid"));
        }
        let d = self.dim();
        let scale = |g: &GridFunction| -> Result<GridFunction> {
            let vals = g.values().iter().enumerate().map(|(i, v)| v * f.values()[i / d]).collect();
            GridFunction::new(g.grid().clone(), d, vals)
        };
        Ok(Self { dx: scale(&self.dx)?, dy: scale(&self.dy)? })
    }

    /// Pointwise (|η(∂_x)|² + |η(∂_y)|²)^½.
    pub fn frobenius(&self) -> Vec<f64> {
        self.dx.pointwise_norm().iter().zip(self.dy.pointwise_norm()).map(|(a, b)| a.hypot(b)).collect()
    }

    /// L^p norm of the Frobenius magnitude.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.grid().lp(&self.frobenius(), p)
    }

    /// L^p norm of |η(∂_x)|, the convention for (0,1)-forms.
    pub fn value_lp_norm(&self, p: f64) -> f64 {
        self.dx.lp_norm(p)
    }

    pub fn max_abs(&self) -> f64 {
        self.dx.max_abs().max(self.dy.max_abs())
    }

    /// max over nodes of |η(∂_y) + I(z)η(∂_x)|; zero for (0,1)-forms.
    pub fn type01_defect(&self, structure: impl Fn(usize) -> Result<DMatrix<f64>>) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 0..self.grid().node_count() {
            let (a, b) = self.at(k);
            worst = worst.max((b + structure(k)? * a).amax());
        }
        Ok(worst)
    }
}

/// ∂̄_{J,j}u = ½(du + J(u)∘du∘j).
pub fn dbar_map(u: &MapU, j: &AlmostComplex) -> Result<OneForm> {
    if j.dim() != u.dim() {
        return Err(invalid("map target and J have different dimensions"));
    }
    let mut out = Vec::with_capacity(u.grid().node_count());
    for k in 0..u.grid().node_count() {
        let jx = j.at(u.point(k)).map_err(|e| at_node(e, k))?;
        let (ux, uy) = u.du(k);
        out.push(((&ux + &jx * &uy) * 0.5, (&uy - &jx * &ux) * 0.5));
    }
    OneForm::from_nodes(u.grid().clone(), u.dim(), out)
}

/// ∂u = ½(du − J(u)∘du∘j), the (1,0) part.
pub fn del_map(u: &MapU, j: &AlmostComplex) -> Result<OneForm> {
    let mut out = Vec::with_capacity(u.grid().node_count());
    for k in 0..u.grid().node_count() {
        let jx = j.at(u.point(k)).map_err(|e| at_node(e, k))?;
        let (ux, uy) = u.du(k);
        out.push(((&ux - &jx * &uy) * 0.5, (&uy + &jx * &ux) * 0.5));
    }
    OneForm::from_nodes(u.grid().clone(), u.dim(), out)
}

pub(crate) fn at_node(e: GeomError, node: usize) -> GeomError {
    match e {
        GeomError::Numeric { msg, .. } => GeomError::Numeric { node, msg },
        other => other,
    }
}

/// Connection one-form of a ∂̄-operator on a trivialized complex bundle over
/// a planar domain, of type (0,1): θ(jv) = −iθ(v).
#[derive(Debug, Clone)]
pub struct DbarForm {
    form: ConnectionForm<Complex64>,
}

impl DbarForm {
    /// The (0,1) part ½(θ(v) + iθ(jv)) of a complex one-form on the plane.
    pub fn from_form(theta: &ConnectionForm<Complex64>) -> Result<Self> {
        if theta.base_dim() != 2 {
            return Err(invalid("a ∂̄ one-form lives on a two-dimensional domain"));
        }
        let t = theta.clone();
        let i = Complex64::i();
        let form = ConnectionForm::new(theta.rank(), 2, move |x, v| {
            Ok((t.at(x, v)? + t.at(x, &rotate(v))? * i) * Complex64::from(0.5))
        });
        Ok(Self { form })
    }

    /// θ = µ dz̄, so θ(∂_x) = µ.
    pub fn constant(mu: DMatrix<Complex64>) -> Result<Self> {
        if !mu.is_square() {
            return Err(invalid("µ must be square"));
        }
        let form = ConnectionForm::new(mu.nrows(), 2, move |_, v| Ok(&mu * Complex64::new(v[0], -v[1])));
        Ok(Self { form })
    }

    pub fn zero(rank: usize) -> Self {
        Self { form: ConnectionForm::zero(rank, 2) }
    }

    pub fn rank(&self) -> usize {
        self.form.rank()
    }

    pub fn form(&self) -> &ConnectionForm<Complex64> {
        &self.form
    }

    pub fn at(&self, x: &[f64], v: &[f64]) -> Result<DMatrix<Complex64>> {
        self.form.at(x, v)
    }

    /// |θ(jv) + iθ(v)|.
    pub fn type_defect(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let d = self.at(x, &rotate(v))? + self.at(x, v)? * Complex64::i();
        Ok(d.iter().fold(0.0, |m, z| m.max(z.norm())))
    }
}

/// ∂̄f + θf for ℂ^k-valued coefficients f (interleaved real storage), with
/// ∂̄ = ½(d + i d∘j).
pub fn bundle_dbar(theta: &DbarForm, f: &GridFunction) -> Result<OneForm> {
    check_planar(f.grid())?;
    let k = theta.rank();
    if f.dim() != 2 * k {
        return Err(invalid(format!("coefficients have {} real components, expected {}", f.dim(), 2 * k)));
    }
    let (fx, fy) = f.cartesian_gradient()?;
    let i = Complex64::i();
    let grid = f.grid().clone();
    let mut out = Vec::with_capacity(grid.node_count());
    for node in grid.nodes() {
        let c = |g: &GridFunction| real_to_complex(&DVector::from_column_slice(g.at(node.index)));
        let (v, vx, vy) = (c(f), c(&fx), c(&fy));
        let z = &node.cart;
        let ax = (&vx + &vy * i) * Complex64::from(0.5) + theta.at(z, &[1.0, 0.0])? * &v;
        let ay = (&vy - &vx * i) * Complex64::from(0.5) + theta.at(z, &[0.0, 1.0])? * &v;
        out.push((complex_to_real(&ax), complex_to_real(&ay)));
    }
    OneForm::from_nodes(grid, 2 * k, out)
}

/// J̃ at (x, c) on T_xΣ ⊕ ℂ^k, (w1, w2) ↦ (j w1, i w2 + 2iθ_x(w1)c), as a
/// real (2+2k)×(2+2k) matrix in the basis (∂_x, ∂_y, interleaved fiber).
pub fn induced_total_j(theta: &DbarForm, x: &[f64], c: &DVector<Complex64>) -> Result<DMatrix<f64>> {
    let k = theta.rank();
    if c.len() != k || x.len() != 2 {
        return Err(invalid("fiber point or base point has the wrong dimension"));
    }
    let mut m = DMatrix::zeros(2 + 2 * k, 2 + 2 * k);
    m[(1, 0)] = 1.0;
    m[(0, 1)] = -1.0;
    for a in 0..2 {
        let mut e = [0.0; 2];
        e[a] = 1.0;
        let col = complex_to_real(&(theta.at(x, &e)? * c * Complex64::new(0.0, 2.0)));
        m.view_mut((2, a), (2 * k, 1)).copy_from(&col);
    }
    let fiber = realify(&(DMatrix::<Complex64>::identity(k, k) * Complex64::i()));
    m.view_mut((2, 2), (2 * k, 2 * k)).copy_from(&fiber);
    Ok(m)
}

/// Horizontal lift (w1, −A(w1)c) of w1 at (x, c) for a connection form A.
fn horizontal_lift(conn: &ConnectionForm<Complex64>, x: &[f64], c: &DVector<Complex64>, w1: &[f64]) -> Result<DVector<f64>> {
    let vert = complex_to_real(&-(conn.at(x, w1)? * c));
    let mut out = DVector::zeros(2 + vert.len());
    out[0] = w1[0];
    out[1] = w1[1];
    out.rows_mut(2, vert.len()).copy_from(&vert);
    Ok(out)
}

/// |J̃ H(w1) − H(j w1)|: how far the horizontal distribution of `conn` is
/// from being J̃-invariant at (x, c).
pub fn splitting_residual(
    theta: &DbarForm,
    conn: &ConnectionForm<Complex64>,
    x: &[f64],
    c: &DVector<Complex64>,
    w1: &[f64],
) -> Result<f64> {
    if conn.rank() != theta.rank() || conn.base_dim() != 2 {
        return Err(invalid("connection and ∂̄-operator act on different bundles"));
    }
    let jt = induced_total_j(theta, x, c)?;
    let lhs = jt * horizontal_lift(conn, x, c, w1)?;
    let rhs = horizontal_lift(conn, x, c, &rotate(w1))?;
    Ok((lhs - rhs).norm())
}

/// max over v ∈ {∂_x, ∂_y} of |A^{0,1}(v) − θ(v)|; zero iff ∂̄_∇ = ∂̄.
pub fn dbar_compatibility_residual(theta: &DbarForm, conn: &ConnectionForm<Complex64>, x: &[f64]) -> Result<f64> {
    let proj = DbarForm::from_form(conn)?;
    let mut worst: f64 = 0.0;
    for v in [[1.0, 0.0], [0.0, 1.0]] {
        let d = proj.at(x, &v)? - theta.at(x, &v)?;
        worst = worst.max(d.iter().fold(0.0, |m, z| m.max(z.norm())));
    }
    Ok(worst)
}

/// Flat ∂̄ on the trivial line bundle with the connection d + 0.1·dx, whose
/// (0,1) part 0.05·dz̄ does not vanish.
pub fn incompatible_connection_example() -> (DbarForm, ConnectionForm<Complex64>) {
    let conn = ConnectionForm::new(1, 2, |_, v: &[f64]| Ok(DMatrix::from_element(1, 1, Complex64::new(0.1 * v[0], 0.0))));
    (DbarForm::zero(1), conn)
}

/// The symbol f ↦ (η + iη∘j)⊗f, as the 2k×k matrix of its values on ∂_x
/// and ∂_y.
pub fn dbar_symbol(eta: [f64; 2], rank: usize) -> DMatrix<Complex64> {
    let [a, b] = eta;
    let on_x = Complex64::new(a, b);
    let on_y = Complex64::new(b, -a);
    DMatrix::from_fn(2 * rank, rank, |r, c| {
        if r % rank != c {
            Complex64::new(0.0, 0.0)
        } else if r < rank {
            on_x
        } else {
            on_y
        }
    })
}
