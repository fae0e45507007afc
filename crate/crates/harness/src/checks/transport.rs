use std::f64::consts::PI;
use std::sync::Arc;

use geomest_core::grids::RectGrid;
use geomest_core::riemann::{ConnectionCoeffs, MetricField, RoundSphere, StereographicSphere};
use geomest_core::sobolev::{ConstantProvenance, InequalityRecord, FITTED_SLACK};
use geomest_core::transport::{
    loop_holonomy_bound, phi_expansion, phi_lipschitz_check, rectangle_holonomy, transport_derivative_defect,
    ExpLikeMap, MetricBundle, PathCurve, SurfaceMap,
};
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use super::{log_slope, rvec, uniform, worst_of, Check, ConstantKey, Ctx, Measured, Suite};
use crate::Result;

pub(super) const CHECKS: &[Check] = &[
    Check { id: "transport.rectangle", suite: Suite::Transport, lemma_id: "ptrec_lmm", fitted: true, run: rectangle_check },
    Check { id: "transport.loop", suite: Suite::Transport, lemma_id: "ptloop_crl", fitted: true, run: loop_check },
    Check { id: "transport.derivative", suite: Suite::Transport, lemma_id: "ptder_crl", fitted: true, run: derivative_check },
    Check { id: "transport.phi_expansion", suite: Suite::Transport, lemma_id: "expdiff_lmm", fitted: true, run: expansion_check },
    Check { id: "transport.phi_lipschitz", suite: Suite::Transport, lemma_id: "expdiff_crl", fitted: true, run: lipschitz_check },
];

fn sphere() -> Arc<dyn MetricField> {
    Arc::new(RoundSphere)
}

fn fitted(lemma_id: &str, lhs: f64, structural: f64) -> Measured {
    let rec = InequalityRecord::new(lemma_id, lhs, 0.0, structural, 1.0, ConstantProvenance::Fitted, FITTED_SLACK);
    Measured::fitted(rec, ConstantKey::plain(lemma_id))
}

/// The latitude θ = θ₀ of the round sphere in polar coordinates.
pub fn latitude_loop(theta0: f64, n_steps: usize) -> Result<PathCurve> {
    Ok(PathCurve::new(0.0, 2.0 * PI, move |t| vec![theta0, t], |_| vec![0.0, 1.0], n_steps)?)
}

/// Rotation angle of a 2×2 transport matrix in the orthonormal frame
/// (e1/|e1|, e2/|e2|) of a diagonal metric.
pub fn rotation_angle(pi: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    let f = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / g[(0, 0)].sqrt(), 1.0 / g[(1, 1)].sqrt()]));
    let r = f.clone().try_inverse().expect("diagonal frame") * pi * f;
    r[(1, 0)].atan2(r[(0, 0)])
}

/// A bent coordinate rectangle on the round sphere over [0, 1]².
fn rectangle_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let theta0 = uniform(rng, 0.4, 2.0);
    let phi0 = uniform(rng, -1.0, 1.0);
    let (a, b) = (uniform(rng, 0.05, 0.7), uniform(rng, 0.05, 1.5));
    let (e1, e2) = (uniform(rng, -0.1, 0.1), uniform(rng, -0.3, 0.3));
    let u = SurfaceMap::new(
        move |s, t| vec![theta0 + a * s + e1 * (PI * s).sin() * (PI * t).sin(), phi0 + b * t + e2 * s * t],
        move |s, t| vec![a + e1 * PI * (PI * s).cos() * (PI * t).sin(), e2 * t],
        move |s, t| vec![e1 * PI * (PI * s).sin() * (PI * t).cos(), b + e2 * s],
    );
    let n = ctx.grids.rect;
    let grid = RectGrid::new(0.0, 1.0, 0.0, 1.0, n, n)?;
    let g = sphere();
    let bundle = MetricBundle::tangent(g.clone(), &ConnectionCoeffs::levi_civita(g));
    let res = rectangle_holonomy(&u, &grid, &bundle, ctx.grids.transport_steps)?;
    Ok(vec![fitted("ptrec_lmm", res.defect, res.structural)
        .param("theta0", theta0)
        .param("d_theta", a)
        .param("d_phi", b)
        .param("steps", ctx.grids.transport_steps as f64)])
}

/// A closed loop r(t)(cos t, sin t) + c on the stereographic sphere with a
/// wobbling radius.
fn loop_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let c = rvec(rng, 2, -0.8, 0.8);
    let r0 = uniform(rng, 0.05, 0.8);
    let e = uniform(rng, 0.0, 0.3);
    let k = uniform(rng, 1.0, 5.0).floor();
    let ph = uniform(rng, 0.0, 2.0 * PI);
    let (c0, c1) = (c[0], c[1]);
    let radius = move |t: f64| r0 * (1.0 + e * (k * t + ph).cos());
    let d_radius = move |t: f64| -r0 * e * k * (k * t + ph).sin();
    let alpha = PathCurve::new(
        0.0,
        2.0 * PI,
        move |t| vec![c0 + radius(t) * t.cos(), c1 + radius(t) * t.sin()],
        move |t| {
            vec![d_radius(t) * t.cos() - radius(t) * t.sin(), d_radius(t) * t.sin() + radius(t) * t.cos()]
        },
        4 * ctx.grids.transport_steps,
    )?;
    let g: Arc<dyn MetricField> = Arc::new(StereographicSphere);
    let bundle = MetricBundle::tangent(g.clone(), &ConnectionCoeffs::levi_civita(g));
    let res = loop_holonomy_bound(&alpha, &bundle, 1.0)?;
    let (l1, l2) = res.loop_terms.unwrap_or((0.0, 0.0));
    Ok(vec![fitted("ptloop_crl", res.defect, res.structural).param("r0", r0).param("l1", l1).param("l2", l2)])
}

/// Draws per record of the expansion checks; the worst one is kept.
const EXPANSION_DRAWS: usize = 8;
const LIPSCHITZ_DRAWS: usize = 16;

fn sphere_base(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![uniform(rng, 0.9, PI - 0.9), uniform(rng, -2.0, 2.0)]
}

/// Tangent vector at polar point `x` with g-length in [lo, hi) and angle
/// `angle` in the orthonormal frame (∂θ, ∂φ/sin θ).
fn tangent(rng: &mut ChaCha8Rng, x: &[f64], angle: f64, lo: f64, hi: f64) -> Vec<f64> {
    frame_vector(x, angle, uniform(rng, lo, hi))
}

fn frame_vector(x: &[f64], angle: f64, r: f64) -> Vec<f64> {
    vec![r * angle.cos(), r * angle.sin() / x[0].sin()]
}

fn random_tangent(rng: &mut ChaCha8Rng, x: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let angle = uniform(rng, 0.0, 2.0 * PI);
    tangent(rng, x, angle, lo, hi)
}

/// Derivative of the transported family along α̃(t) = r(e + t f).
fn derivative_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let g = sphere();
    let conn = ConnectionCoeffs::levi_civita(g.clone());
    let e = ExpLikeMap::riemannian(g);
    let x = sphere_base(rng);
    let r = uniform(rng, 0.02, 0.3);
    let (a, f) = (rvec(rng, 2, -1.0, 1.0), rvec(rng, 2, -1.0, 1.0));
    let (x0, x1) = (rvec(rng, 2, -1.0, 1.0), rvec(rng, 2, -1.0, 1.0));
    let alpha = move |t: f64| DVector::from_vec(vec![r * (a[0] + t * f[0]), r * (a[1] + t * f[1])]);
    let xi = move |t: f64| DVector::from_vec(vec![x0[0] + t * x1[0], x0[1] + t * x1[1]]);
    let est = transport_derivative_defect(&e, &conn, &x, &alpha, &xi)?;
    Ok(vec![fitted("ptder_crl", est.lhs, est.structural).param("r", r)])
}

fn expansion_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let g = sphere();
    let conn = ConnectionCoeffs::levi_civita(g.clone());
    let e = ExpLikeMap::riemannian(g);
    let worst = worst_of(EXPANSION_DRAWS, || {
        let x = sphere_base(rng);
        let (v, w0, w1) = (random_tangent(rng, &x, 0.3, 0.6), random_tangent(rng, &x, 0.05, 0.3), random_tangent(rng, &x, 0.2, 0.5));
        let res = phi_expansion(&e, &conn, &x, &v, &w0, &w1)?;
        Ok(fitted("expdiff_lmm", res.residual_norm, res.structural).param("theta", x[0]))
    })?;

    // |w0| = t with w1 = 0 and w0 transverse to v: the residual is t² times
    // a non-vanishing curvature term.
    let x = sphere_base(rng);
    let a = uniform(rng, 0.0, 2.0 * PI);
    let v = tangent(rng, &x, a, 0.3, 0.6);
    let b = a + uniform(rng, PI / 4.0, 3.0 * PI / 4.0);
    let ts = [0.1, 0.05, 0.025];
    let mut norms = Vec::with_capacity(ts.len());
    for t in ts {
        let w0 = frame_vector(&x, b, t);
        norms.push(phi_expansion(&e, &conn, &x, &v, &w0, &[0.0, 0.0])?.residual_norm);
    }
    let slope = log_slope(&ts, &norms);
    Ok(vec![worst, Measured::identity("expdiff_lmm", (slope - 2.0).abs(), 0.1).param("slope", slope)])
}

fn lipschitz_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let g = sphere();
    let conn = ConnectionCoeffs::levi_civita(g.clone());
    let e = ExpLikeMap::riemannian(g);
    let plus = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + q).collect() };
    let worst = worst_of(LIPSCHITZ_DRAWS, || {
        let x = sphere_base(rng);
        let v = random_tangent(rng, &x, 0.3, 0.6);
        let (w0, w1) = (random_tangent(rng, &x, 0.15, 0.2), random_tangent(rng, &x, 0.2, 0.5));
        let u0 = plus(&w0, &random_tangent(rng, &x, 0.08, 0.1));
        let u1 = plus(&w1, &random_tangent(rng, &x, 0.05, 0.2));
        let est = phi_lipschitz_check(&e, &conn, &x, &v, (&w0, &w1), (&u0, &u1))?;
        Ok(fitted("expdiff_crl", est.lhs, est.structural).param("theta", x[0]))
    })?;
    Ok(vec![worst])
}
