use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::forms::{at_node, OneForm, SectionAlongU};
use super::structure::{covariant_j_residual, nijenhuis, AlmostComplex};
use crate::error::{invalid, precondition, GeomError, Result};
use crate::grids::GridFunction;
use crate::linalg::{realify, standard_complex_structure};
use crate::riemann::{torsion, ConnectionCoeffs, ConnectionForm};
use crate::transport::ExpLikeMap;

type MatrixFn = dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync;

/// Zeroth-order term A_x(w, ξ): real-bilinear in w ∈ T_xM and ξ ∈ E_x, and
/// of type (0,1) in w.
pub type ZerothOrder = Arc<dyn Fn(&[f64], &[f64], &DVector<f64>) -> Result<DVector<f64>> + Send + Sync>;

/// D = ∂̄_∇ + A on a complex bundle E → M of real rank 2k, with fiber
/// complex structure I_E(x) and target structure J.
#[derive(Clone)]
pub struct CrOperator {
    target: AlmostComplex,
    connection: ConnectionForm<f64>,
    structure: Arc<MatrixFn>,
    zeroth: Option<ZerothOrder>,
}

impl fmt::Debug for CrOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CrOperator")
            .field("target_dim", &self.target.dim())
            .field("rank", &self.connection.rank())
            .field("zeroth_order", &self.zeroth.is_some())
            .finish()
    }
}

impl CrOperator {
    /// E = TM with I_E = J.
    pub fn tangent(j: &AlmostComplex, conn: &ConnectionCoeffs) -> Result<Self> {
        if conn.dim() != j.dim() {
            return Err(invalid("connection and J dimensions differ"));
        }
        let jj = j.clone();
        Ok(Self {
            target: j.clone(),
            connection: conn.form(),
            structure: Arc::new(move |x| jj.at(x)),
            zeroth: None,
        })
    }

    /// E = M × ℂ^k with a complex connection form.
    pub fn complex(j: &AlmostComplex, theta: &ConnectionForm<Complex64>) -> Result<Self> {
        if theta.base_dim() != j.dim() {
            return Err(invalid("connection form and J live on different bases"));
        }
        let k = theta.rank();
        let t = theta.clone();
        let i_e = standard_complex_structure(k);
        Ok(Self {
            target: j.clone(),
            connection: ConnectionForm::new(2 * k, j.dim(), move |x, v| Ok(realify(&t.at(x, v)?))),
            structure: Arc::new(move |_| Ok(i_e.clone())),
            zeroth: None,
        })
    }

    /// Flat trivial ℂ^k.
    pub fn trivial(j: &AlmostComplex, k: usize) -> Result<Self> {
        Self::complex(j, &ConnectionForm::zero(k, j.dim()))
    }

    pub fn with_zeroth_order(mut self, a: ZerothOrder) -> Self {
        self.zeroth = Some(a);
        self
    }

    /// A(w, ξ) = A_J(w, ξ), for E = TM.
    pub fn with_nijenhuis(self) -> Result<Self> {
        if self.connection.rank() != self.target.dim() {
            return Err(invalid("the Nijenhuis pairing needs E = TM"));
        }
        let j = self.target.clone();
        Ok(self.with_zeroth_order(Arc::new(move |x, w, xi| nijenhuis(&j, x, w, xi.as_slice()))))
    }

    pub fn target(&self) -> &AlmostComplex {
        &self.target
    }

    pub fn connection(&self) -> &ConnectionForm<f64> {
        &self.connection
    }

    /// Real rank of E.
    pub fn rank(&self) -> usize {
        self.connection.rank()
    }

    pub fn structure_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        (self.structure)(x)
    }

    pub fn zeroth_order(&self) -> Option<&ZerothOrder> {
        self.zeroth.as_ref()
    }
}

/// ∇^uξ as a one-form: ∇^u_vξ = dξ(v) + θ(u)(du(v))ξ.
pub fn pullback_covariant(theta: &ConnectionForm<f64>, xi: &SectionAlongU) -> Result<OneForm> {
    let u = xi.map();
    if theta.rank() != xi.dim() || theta.base_dim() != u.dim() {
        return Err(invalid("connection does not act on this section"));
    }
    let (px, py) = xi.partials()?;
    let mut out = Vec::with_capacity(u.grid().node_count());
    for k in 0..u.grid().node_count() {
        let x = u.point(k);
        let (ux, uy) = u.du(k);
        let v = xi.at(k);
        let nx = DVector::from_column_slice(px.at(k)) + theta.at(x, ux.as_slice())? * &v;
        let ny = DVector::from_column_slice(py.at(k)) + theta.at(x, uy.as_slice())? * &v;
        out.push((nx, ny));
    }
    OneForm::from_nodes(u.grid().clone(), xi.dim(), out)
}

/// D_uξ = ∂̄_{∇^u}ξ + A(u)(∂u, ξ), with ∂̄_{∇^u}ξ = ½(∇^uξ + I_E∇^u_{j}ξ).
pub fn cr_pullback(op: &CrOperator, xi: &SectionAlongU) -> Result<OneForm> {
    let u = xi.map();
    if op.target.dim() != u.dim() {
        return Err(invalid("operator target and map target differ"));
    }
    let nabla = pullback_covariant(&op.connection, xi)?;
    let mut out = Vec::with_capacity(u.grid().node_count());
    for k in 0..u.grid().node_count() {
        let x = u.point(k);
        let i_e = op.structure_at(x).map_err(|e| at_node(e, k))?;
        let (nx, ny) = nabla.at(k);
        let mut vx = (&nx + &i_e * &ny) * 0.5;
        let mut vy = (&ny - &i_e * &nx) * 0.5;
        if let Some(a) = &op.zeroth {
            let jx = op.target.at(x).map_err(|e| at_node(e, k))?;
            let (ux, uy) = u.du(k);
            let del_x = (&ux - &jx * &uy) * 0.5;
            let del_y = (&uy + &jx * &ux) * 0.5;
            let v = xi.at(k);
            vx += a(x, del_x.as_slice(), &v)?;
            vy += a(x, del_y.as_slice(), &v)?;
        }
        if vx.iter().chain(vy.iter()).any(|c| !c.is_finite()) {
            return Err(GeomError::Numeric { node: k, msg: "CR operator value".into() });
        }
        out.push((vx, vy));
    }
    OneForm::from_nodes(u.grid().clone(), xi.dim(), out)
}

/// D^∇_{J,j;u}ξ = ½(∇^uξ + J∇^u_jξ) − ½(T_∇(du, ξ) + J T_∇(du∘j, ξ)).
pub fn linearized_dbar(j: &AlmostComplex, conn: &ConnectionCoeffs, xi: &SectionAlongU) -> Result<OneForm> {
    let u = xi.map();
    let nabla = pullback_covariant(&conn.form(), xi)?;
    let mut out = Vec::with_capacity(u.grid().node_count());
    for k in 0..u.grid().node_count() {
        let x = u.point(k);
        let jx = j.at(x).map_err(|e| at_node(e, k))?;
        let (ux, uy) = u.du(k);
        let (nx, ny) = nabla.at(k);
        let v = xi.at(k);
        let tx = torsion(conn, x, ux.as_slice(), v.as_slice())?;
        let ty = torsion(conn, x, uy.as_slice(), v.as_slice())?;
        let vx = (&nx + &jx * &ny) * 0.5 - (&tx + &jx * &ty) * 0.5;
        let vy = (&ny - &jx * &nx) * 0.5 - (&ty - &jx * &tx) * 0.5;
        out.push((vx, vy));
    }
    OneForm::from_nodes(u.grid().clone(), xi.dim(), out)
}

/// The pieces of ∂̄_uξ = ∂̄_{J,j}u + D^∇_{J,j;u}ξ + N(ξ).
#[derive(Debug, Clone)]
pub struct NonlinearDbar {
    /// ∂̄_uξ = Π_ξ⁻¹ ∂̄_{J,j}(exp_u ξ).
    pub dbar_u_xi: OneForm,
    /// ∂̄_{J,j}u.
    pub dbar_u: OneForm,
    /// D^∇_{J,j;u}ξ.
    pub linear: OneForm,
    /// N(ξ).
    pub remainder: OneForm,
}

/// Splits ∂̄_{J,j}(exp_u ξ), pulled back to u by ∇-transport along the
/// exp rays, into ∂̄_{J,j}u, the linearization and the remainder N.
/// Partials of u and exp_u ξ are both taken on the grid, so ξ = 0 gives
/// N = 0 exactly.
pub fn nonlinear_dbar(
    xi: &SectionAlongU,
    exp: &ExpLikeMap,
    j: &AlmostComplex,
    conn: &ConnectionCoeffs,
) -> Result<NonlinearDbar> {
    let u = xi.map();
    let n = u.dim();
    if xi.dim() != n || exp.dim() != n || j.dim() != n || conn.dim() != n {
        return Err(invalid("nonlinear ∂̄ needs E = TM with matching dimensions"));
    }
    let grid = u.grid().clone();
    let count = grid.node_count();
    let theta = conn.form();
    let mut moved = Vec::with_capacity(count * n);
    let mut transports = Vec::with_capacity(count);
    for k in 0..count {
        let x = u.point(k);
        let r = covariant_j_residual(j, conn, x)?;
        if r > 1e-8 {
            return Err(precondition(format!("∇J = {r:e} at node {k}; use a J-linear connection")));
        }
        let v = xi.at(k);
        if !exp.in_plateau(x, v.as_slice()) {
            return Err(precondition(format!(
                "|ξ| = {} at node {k} is outside the plateau radius {}",
                exp.norm(x, v.as_slice()),
                exp.plateau()
            )));
        }
        let (p, pi) = exp.ray_transport(&theta, x, v.as_slice())?;
        moved.extend(p);
        transports.push(pi.lu());
    }
    let w = GridFunction::new(grid.clone(), n, moved)?;
    let (wx, wy) = w.cartesian_gradient()?;
    let (ux, uy) = u.values().cartesian_gradient()?;
    let mut pulled = Vec::with_capacity(count);
    let mut base = Vec::with_capacity(count);
    for (k, lu) in transports.iter().enumerate() {
        let jw = j.at(w.at(k)).map_err(|e| at_node(e, k))?;
        let ju = j.at(u.point(k)).map_err(|e| at_node(e, k))?;
        let col = |g: &GridFunction| DVector::from_column_slice(g.at(k));
        let (ax, ay) = (col(&wx), col(&wy));
        let dx = (&ax + &jw * &ay) * 0.5;
        let dy = (&ay - &jw * &ax) * 0.5;
        let solve = |b: &DVector<f64>| {
            lu.solve(b).ok_or_else(|| GeomError::Numeric { node: k, msg: "singular transport".into() })
        };
        pulled.push((solve(&dx)?, solve(&dy)?));
        let (bx, by) = (col(&ux), col(&uy));
        base.push(((&bx + &ju * &by) * 0.5, (&by - &ju * &bx) * 0.5));
    }
    let dbar_u_xi = OneForm::from_nodes(grid.clone(), n, pulled)?;
    let dbar_u = OneForm::from_nodes(grid, n, base)?;
    let linear = linearized_dbar(j, conn, xi)?;
    let remainder = dbar_u_xi.sub(&dbar_u)?.sub(&linear)?;
    Ok(NonlinearDbar { dbar_u_xi, dbar_u, linear, remainder })
}

/// Discrete ‖·‖_p, ‖·‖_{p,1} = ‖ξ‖_p + ‖∇^uξ‖_p and ‖·‖_{C⁰} for sections
/// along a map, with Euclidean fiber norms.
#[derive(Debug, Clone)]
pub struct SectionNorms {
    p: f64,
    connection: ConnectionForm<f64>,
}

impl SectionNorms {
    pub fn new(p: f64, connection: ConnectionForm<f64>) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(invalid(format!("exponent p = {p} must be at least 1")));
        }
        Ok(Self { p, connection })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lp(&self, xi: &SectionAlongU) -> f64 {
        xi.values().lp_norm(self.p)
    }

    pub fn form_lp(&self, eta: &OneForm) -> f64 {
        eta.lp_norm(self.p)
    }

    pub fn covariant_lp(&self, xi: &SectionAlongU) -> Result<f64> {
        Ok(pullback_covariant(&self.connection, xi)?.lp_norm(self.p))
    }

    pub fn sobolev(&self, xi: &SectionAlongU) -> Result<f64> {
        Ok(self.lp(xi) + self.covariant_lp(xi)?)
    }

    pub fn c0(&self, xi: &SectionAlongU) -> f64 {
        xi.values().pointwise_norm().into_iter().fold(0.0, f64::max)
    }
}

/// One probe: a scalar multiplier f, a one-form η and a section ξ.
#[derive(Debug, Clone)]
pub struct AdmissibilityProbe {
    pub multiplier: GridFunction,
    pub form: OneForm,
    pub section: SectionAlongU,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// max ‖fη‖_p / (‖f‖_{C⁰}‖η‖_p).
    pub multiplier_ratio: f64,
    /// max |‖η∘j‖_p − ‖η‖_p| / ‖η‖_p.
    pub rotation_defect: f64,
    /// max ‖∇^uξ‖_p / ‖ξ‖_{p,1}.
    pub derivative_ratio: f64,
    /// Smallest C₀ with ‖ξ‖_{C⁰} ≤ C₀‖ξ‖_{p,1} on the probes.
    pub c0_constant: f64,
    pub conditions: [bool; 4],
}

impl AdmissibilityReport {
    pub fn pass(&self) -> bool {
        self.conditions.iter().all(|c| *c)
    }
}

/// Checks the four admissibility conditions of a norm pair on a probe set.
pub fn admissibility_check(norms: &SectionNorms, probes: &[AdmissibilityProbe]) -> Result<AdmissibilityReport> {
    if probes.is_empty() {
        return Err(invalid("admissibility needs at least one probe"));
    }
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else if a > 0.0 { f64::INFINITY } else { 0.0 };
    let mut r = AdmissibilityReport {
        multiplier_ratio: 0.0,
        rotation_defect: 0.0,
        derivative_ratio: 0.0,
        c0_constant: 0.0,
        conditions: [true; 4],
    };
    for probe in probes {
        let f_c0 = probe.multiplier.max_abs();
        let eta = norms.form_lp(&probe.form);
        let f_eta = norms.form_lp(&probe.form.multiply(&probe.multiplier)?);
        r.multiplier_ratio = r.multiplier_ratio.max(ratio(f_eta, f_c0 * eta));
        let rot = norms.form_lp(&probe.form.compose_j());
        r.rotation_defect = r.rotation_defect.max(ratio((rot - eta).abs(), eta));
        let sob = norms.sobolev(&probe.section)?;
        r.derivative_ratio = r.derivative_ratio.max(ratio(norms.covariant_lp(&probe.section)?, sob));
        r.c0_constant = r.c0_constant.max(ratio(norms.c0(&probe.section), sob));
    }
    r.conditions = [
        r.multiplier_ratio <= 1.0 + 1e-12,
        r.rotation_defect <= 1e-12,
        r.derivative_ratio <= 1.0 + 1e-12,
        r.c0_constant.is_finite(),
    ];
    Ok(r)
}
