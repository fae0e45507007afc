use std::f64::consts::PI;

use nalgebra::DVector;

use super::{require_mean_zero, ConstantProvenance, InequalityRecord, FITTED_SLACK};
use crate::error::{invalid, precondition, Result};
use crate::grids::{Grid, GridFunction};
use crate::linalg::g_norm;
use crate::riemann::{metric_compat_residual, ConnectionForm};
use crate::transport::{transport_matrix, MetricBundle, PathCurve};

fn require_circle(f: &GridFunction) -> Result<()> {
    match &**f.grid() {
        Grid::Circle(_) => Ok(()),
        _ => Err(invalid("expected a function on a circle grid")),
    }
}

/// ∫|ζ|² ≤ ∫|ζ′|² for mean-zero ζ on S¹, ζ′ spectral.
pub fn fourier_poincare(zeta: &GridFunction) -> Result<InequalityRecord> {
    require_circle(zeta)?;
    let l2 = zeta.lp_norm(2.0);
    require_mean_zero(zeta, l2)?;
    let lhs = l2 * l2;
    let rhs = zeta.differentiate(0)?.lp_norm(2.0).powi(2);
    Ok(InequalityRecord::new("poin_lmm1", lhs, 0.0, rhs, 1.0, ConstantProvenance::Paper, 1e-10)
        .with_param("n", zeta.grid().node_count() as f64))
}

/// |∫⟨∇_θξ, ζ⟩dθ| ≤ ‖∇_θξ‖₂‖∇_θζ‖₂ + C·min(‖dα‖₁, ‖dα‖₂²)‖ξ‖_{2,1}‖ζ‖₂
/// for sections ξ, ζ along a closed curve α, reparametrized over the
/// standard circle. Sections are frame components at the circle nodes.
pub fn loop_pairing_bound(
    alpha: &PathCurve,
    bundle: &MetricBundle<f64>,
    xi: &GridFunction,
    zeta: &GridFunction,
    constant: f64,
) -> Result<InequalityRecord> {
    if !alpha.is_closed() {
        return Err(invalid("loop pairing needs a closed curve"));
    }
    require_circle(xi)?;
    if !std::sync::Arc::ptr_eq(xi.grid(), zeta.grid()) {
        return Err(invalid("sections live on different grids"));
    }
    let k = bundle.rank();
    if xi.dim() != k || zeta.dim() != k {
        return Err(invalid(format!("sections must have {k} components")));
    }
    let grid = xi.grid().clone();
    let (a, b) = alpha.interval();
    let scale = (b - a) / (2.0 * PI);
    let (dxi, dzeta) = (xi.differentiate(0)?, zeta.differentiate(0)?);
    let (mut pairing, mut nxi, mut nzeta) = (0.0, 0.0, 0.0);
    let (mut n_dxi, mut n_dzeta, mut l1, mut l2) = (0.0, 0.0, 0.0, 0.0);
    for node in grid.nodes() {
        let w = grid.weight(node.index);
        let t = a + scale * node.native[0];
        let x = alpha.point(t);
        let v: Vec<f64> = alpha.velocity(t).iter().map(|c| c * scale).collect();
        let h = (bundle.fiber_metric)(&x);
        let compat = metric_compat_residual(&bundle.connection, &bundle.fiber_metric, &x, &v)?.amax();
        if compat > 1e-6 * (1.0 + h.amax()) {
            return Err(precondition(format!("connection is not metric compatible along α: residual {compat:e}")));
        }
        let theta = bundle.connection.at(&x, &v)?;
        let s = DVector::from_column_slice(xi.at(node.index));
        let z = DVector::from_column_slice(zeta.at(node.index));
        let ns = DVector::from_column_slice(dxi.at(node.index)) + &theta * &s;
        let nz = DVector::from_column_slice(dzeta.at(node.index)) + &theta * &z;
        pairing += w * (ns.transpose() * &h * &z)[0];
        nxi += w * g_norm(&s, &h).powi(2);
        nzeta += w * g_norm(&z, &h).powi(2);
        n_dxi += w * g_norm(&ns, &h).powi(2);
        n_dzeta += w * g_norm(&nz, &h).powi(2);
        let speed = g_norm(&DVector::from_vec(v), &bundle.base.eval(&x));
        l1 += w * speed;
        l2 += w * speed * speed;
    }
    let (nxi, nzeta, n_dxi, n_dzeta) = (nxi.sqrt(), nzeta.sqrt(), n_dxi.sqrt(), n_dzeta.sqrt());
    let t1 = n_dxi * n_dzeta;
    let t2 = l1.min(l2) * (nxi + n_dxi) * nzeta;
    Ok(InequalityRecord::new("poincare_prp", pairing.abs(), t1, t2, constant, ConstantProvenance::Fitted, FITTED_SLACK)
        .with_param("n", grid.node_count() as f64)
        .with_param("length", l1)
        .with_param("energy", l2)
        .with_param("t1", t1)
        .with_param("t2", t2))
}

fn flat_step(t: f64) -> f64 {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let (u, v) = (psi(t), psi(1.0 - t));
    u / (u + v)
}

/// ζ(θ) = Π(θ)((1 − s)c + sΠ(2π)⁻¹c) along a closed curve, with s a flat
/// step from 0 to 1. The result is smooth and closed, and ∇ζ vanishes near
/// the base point.
pub fn closed_parallel_section(
    alpha: &PathCurve,
    connection: &ConnectionForm<f64>,
    grid: &std::sync::Arc<Grid>,
    c: &[f64],
) -> Result<GridFunction> {
    if !matches!(&**grid, Grid::Circle(_)) {
        return Err(invalid("expected a circle grid"));
    }
    if !alpha.is_closed() {
        return Err(invalid("parallel section needs a closed curve"));
    }
    let k = connection.rank();
    if c.len() != k {
        return Err(invalid(format!("initial vector must have {k} components")));
    }
    let c = DVector::from_column_slice(c);
    let end = transport_matrix(connection, alpha)?
        .try_inverse()
        .ok_or_else(|| invalid("holonomy is singular"))?
        * &c;
    let (a, b) = alpha.interval();
    let mut values = Vec::with_capacity(grid.node_count() * k);
    for node in grid.nodes() {
        let s = node.native[0] / (2.0 * PI);
        let v = &c * (1.0 - flat_step(s)) + &end * flat_step(s);
        let pi = if s > 0.0 {
            transport_matrix(connection, &alpha.restrict(a + (b - a) * s)?)?
        } else {
            nalgebra::DMatrix::identity(k, k)
        };
        values.extend((pi * v).iter());
    }
    GridFunction::new(grid.clone(), k, values)
}
