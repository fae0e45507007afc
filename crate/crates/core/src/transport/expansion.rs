use nalgebra::{DMatrix, DVector};

use super::exp::{central_richardson, ExpLikeMap};
use super::ode::{integrate, OdeOptions};
use crate::error::{invalid, precondition, GeomError, Result};
use crate::linalg::{flatten, g_norm, unflatten};
use crate::riemann::{torsion, ConnectionCoeffs};

/// A measured left-hand side and the structural term its bound multiplies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub lhs: f64,
    pub structural: f64,
}

impl Estimate {
    pub fn bound(&self, constant: f64) -> f64 {
        constant * self.structural
    }

    pub fn ratio(&self) -> f64 {
        super::holonomy::safe_ratio(self.lhs, self.structural)
    }
}

fn norm_at(e: &ExpLikeMap, x: &[f64], v: &DVector<f64>) -> f64 {
    match e.metric() {
        Some(g) => g_norm(v, &g.eval(x)),
        None => v.norm(),
    }
}

/// Transport matrix of `conn` along τ ↦ β(τ) from τ = t to τ = 0, with β′
/// from difference quotients of the fixed-step exponential.
fn transport_back(conn: &ConnectionCoeffs, beta: &dyn Fn(f64) -> Result<Vec<f64>>, t: f64) -> Result<DMatrix<f64>> {
    let n = conn.dim();
    let h = 1e-4;
    let rhs = |tau: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let x = beta(tau)?;
        let vel = central_richardson(|s| Ok(DVector::from_vec(beta(tau + s)?)), h)?;
        let pi = unflatten::<f64>(n, n, y);
        let d = -(conn.at(&x)?.contract(vel.as_slice()) * pi);
        dy.copy_from_slice(d.as_slice());
        Ok(())
    };
    let y = integrate(rhs, t, 0.0, &flatten(&DMatrix::<f64>::identity(n, n)), &OdeOptions::fixed(4), |_, _| Ok(()))?;
    Ok(unflatten(n, n, &y))
}

/// |D/dt(Π_{α̃(t)}ξ(t))|_{t=0} − Π_{α̃(0)}ξ′(0)| for curves α̃ in T_xM and ξ
/// in the fiber of TM at x, transported by `conn` along exp rays.
/// Structural term |α̃(0)||α̃′(0)||ξ(0)|.
pub fn transport_derivative_defect(
    exp: &ExpLikeMap,
    conn: &ConnectionCoeffs,
    x: &[f64],
    alpha: &dyn Fn(f64) -> DVector<f64>,
    xi: &dyn Fn(f64) -> DVector<f64>,
) -> Result<Estimate> {
    let n = exp.dim();
    if conn.dim() != n || alpha(0.0).len() != n || xi(0.0).len() != n {
        return Err(invalid("transport derivative needs matching dimensions"));
    }
    let theta = conn.form();
    let h = 1e-3;
    let v_at = |t: f64| -> Result<DVector<f64>> {
        let (_, pi) = exp.ray_transport_fixed(&theta, x, alpha(t).as_slice())?;
        Ok(pi * xi(t))
    };
    let beta = |t: f64| exp.exp_fixed(x, alpha(t).as_slice());
    let pulled = |t: f64| -> Result<DVector<f64>> {
        if t == 0.0 {
            return v_at(0.0);
        }
        Ok(transport_back(conn, &beta, t)? * v_at(t)?)
    };
    let d_v = central_richardson(pulled, h)?;
    let d_xi = central_richardson(|t| Ok(xi(t)), h)?;
    let d_alpha = central_richardson(|t| Ok(alpha(t)), h)?;
    let (p0, pi0) = exp.ray_transport_fixed(&theta, x, alpha(0.0).as_slice())?;
    let diff = d_v - pi0 * d_xi;
    if diff.iter().any(|c| !c.is_finite()) {
        return Err(GeomError::Numeric { node: 0, msg: "transport derivative quotient".into() });
    }
    let lhs = norm_at(exp, &p0, &diff);
    let structural = norm_at(exp, x, &alpha(0.0)) * norm_at(exp, x, &d_alpha) * norm_at(exp, x, &xi(0.0));
    Ok(Estimate { lhs, structural })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiExpansion {
    /// Φ_x(v; w0, w1) ∈ T_xM.
    pub phi: DVector<f64>,
    /// Φ̃ = Φ − (v + w1 − T(v, w0)).
    pub residual: DVector<f64>,
    pub residual_norm: f64,
    /// |v||w0|² + |w0||w1|.
    pub structural: f64,
}

fn phi_tilde(
    exp: &ExpLikeMap,
    conn: &ConnectionCoeffs,
    x: &[f64],
    v: &[f64],
    w0: &[f64],
    w1: &[f64],
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = exp.dim();
    if [x.len(), v.len(), w0.len(), w1.len(), conn.dim()].iter().any(|d| *d != n) {
        return Err(invalid("phi expansion needs matching dimensions"));
    }
    if !exp.in_plateau(x, w0) {
        return Err(precondition(format!(
            "|w0| = {} is outside the plateau radius {}",
            exp.norm(x, w0),
            exp.plateau()
        )));
    }
    let gamma = conn.at(x)?;
    // ξ(s) = w0 + s(w1 − Γ(v)w0) has D/ds ξ = w1 along α(s) = x + sv.
    let dxi = DVector::from_column_slice(w1) - gamma.contract(v) * DVector::from_column_slice(w0);
    let d_exp = exp.differential(x, w0, v, dxi.as_slice())?;
    let (_, pi) = exp.ray_transport_fixed(&conn.form(), x, w0)?;
    let pi_inv = pi.try_inverse().ok_or_else(|| GeomError::Numeric { node: 0, msg: "singular transport".into() })?;
    let phi = pi_inv * d_exp;
    let model = DVector::from_column_slice(v) + DVector::from_column_slice(w1) - torsion(conn, x, v, w0)?;
    let residual = &phi - model;
    Ok((phi, residual))
}

/// Φ_x(v; w0, w1) by difference quotients of exp along a curve realizing
/// (v, w0, w1), and its deviation from v + w1 − T(v, w0).
pub fn phi_expansion(
    exp: &ExpLikeMap,
    conn: &ConnectionCoeffs,
    x: &[f64],
    v: &[f64],
    w0: &[f64],
    w1: &[f64],
) -> Result<PhiExpansion> {
    let (phi, residual) = phi_tilde(exp, conn, x, v, w0, w1)?;
    let nv = |u: &[f64]| norm_at(exp, x, &DVector::from_column_slice(u));
    let structural = nv(v) * nv(w0).powi(2) + nv(w0) * nv(w1);
    let residual_norm = norm_at(exp, x, &residual);
    Ok(PhiExpansion { phi, residual, residual_norm, structural })
}

/// |Φ̃(v; w0, w1) − Φ̃(v; w0′, w1′)| against
/// ((|w0|+|w0′|)|v| + |w1| + |w1′|)|w0−w0′| + (|w0|+|w0′|)|w1−w1′|.
pub fn phi_lipschitz_check(
    exp: &ExpLikeMap,
    conn: &ConnectionCoeffs,
    x: &[f64],
    v: &[f64],
    first: (&[f64], &[f64]),
    second: (&[f64], &[f64]),
) -> Result<Estimate> {
    let (w0, w1) = first;
    let (u0, u1) = second;
    let (_, r1) = phi_tilde(exp, conn, x, v, w0, w1)?;
    let (_, r2) = phi_tilde(exp, conn, x, v, u0, u1)?;
    let nv = |u: &[f64]| norm_at(exp, x, &DVector::from_column_slice(u));
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p - q).collect() };
    let s0 = nv(w0) + nv(u0);
    let structural = (s0 * nv(v) + nv(w1) + nv(u1)) * nv(&diff(w0, u0)) + s0 * nv(&diff(w1, u1));
    Ok(Estimate { lhs: norm_at(exp, x, &(r1 - r2)), structural })
}
