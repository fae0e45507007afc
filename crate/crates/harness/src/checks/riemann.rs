use std::f64::consts::PI;
use std::sync::Arc;

use geomest_core::riemann::{
    christoffel, connection_difference, covariant_derivative, horizontal_splitting, metric_compat_residual, torsion,
    ChartBox, Christoffel, ConnectionCoeffs, FiberMetric, HyperbolicHalfPlane, MetricField, RoundSphere,
    StereographicSphere,
};
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use super::{rvec, uniform, Check, Ctx, Measured, Suite};
use crate::Result;

pub(super) const CHECKS: &[Check] = &[
    Check { id: "riemann.christoffel", suite: Suite::Riemann, lemma_id: "LCconn_lmm", fitted: false, run: christoffel_check },
    Check { id: "riemann.torsion", suite: Suite::Riemann, lemma_id: "torsionfree_e", fitted: false, run: torsion_check },
    Check { id: "riemann.metric_compat", suite: Suite::Riemann, lemma_id: "metriccomp_e", fitted: false, run: compat_check },
    Check { id: "riemann.difference", suite: Suite::Riemann, lemma_id: "LCconn_e1", fitted: false, run: difference_check },
    Check { id: "riemann.covariant_derivative", suite: Suite::Riemann, lemma_id: "na_e3", fitted: false, run: leibniz_check },
    Check { id: "riemann.splitting", suite: Suite::Riemann, lemma_id: "genconn_lmm", fitted: false, run: splitting_check },
];

/// Hides the analytic metric derivative so `christoffel` differentiates
/// numerically.
struct Numeric<M>(M);

impl<M: MetricField> MetricField for Numeric<M> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        self.0.eval(x)
    }
    fn chart(&self) -> ChartBox {
        self.0.chart()
    }
}

/// Γ^θ_φφ = −sin θ cos θ, Γ^φ_θφ = Γ^φ_φθ = cot θ.
pub fn sphere_christoffel(x: &[f64]) -> Christoffel {
    let (s, c) = x[0].sin_cos();
    let mut g = Christoffel::zeros(2);
    g.set(0, 1, 1, -s * c);
    g.set(1, 0, 1, c / s);
    g.set(1, 1, 0, c / s);
    g
}

/// Γ^x_xy = Γ^x_yx = −1/y, Γ^y_xx = 1/y, Γ^y_yy = −1/y.
pub fn half_plane_christoffel(x: &[f64]) -> Christoffel {
    let y = x[1];
    let mut g = Christoffel::zeros(2);
    g.set(0, 0, 1, -1.0 / y);
    g.set(0, 1, 0, -1.0 / y);
    g.set(1, 0, 0, 1.0 / y);
    g.set(1, 1, 1, -1.0 / y);
    g
}

/// max |a − b| / max |b| over all entries.
fn relative_error(a: &Christoffel, b: &Christoffel) -> f64 {
    let n = b.dim();
    let mut diff: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                diff = diff.max((a.get(k, i, j) - b.get(k, i, j)).abs());
            }
        }
    }
    diff / b.max_abs()
}

fn sphere_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![uniform(rng, 0.2, PI - 0.2), uniform(rng, -PI, PI)]
}

fn half_plane_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![uniform(rng, -2.0, 2.0), uniform(rng, 0.3, 3.0)]
}

/// A random built-in metric with a point inside its chart.
fn random_metric(rng: &mut ChaCha8Rng) -> (Arc<dyn MetricField>, Vec<f64>, f64) {
    let which = uniform(rng, 0.0, 3.0).floor();
    let (g, x): (Arc<dyn MetricField>, Vec<f64>) = match which as u8 {
        0 => (Arc::new(RoundSphere), sphere_point(rng)),
        1 => (Arc::new(HyperbolicHalfPlane), half_plane_point(rng)),
        _ => (Arc::new(StereographicSphere), rvec(rng, 2, -1.5, 1.5)),
    };
    (g, x, which)
}

fn christoffel_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let mut out = Vec::new();
    let cases: [(u8, Vec<f64>); 2] = [(0, sphere_point(rng)), (1, half_plane_point(rng))];
    for (which, x) in cases {
        let (oracle, analytic, numeric) = if which == 0 {
            (sphere_christoffel(&x), christoffel(&RoundSphere, &x)?, christoffel(&Numeric(RoundSphere), &x)?)
        } else {
            (
                half_plane_christoffel(&x),
                christoffel(&HyperbolicHalfPlane, &x)?,
                christoffel(&Numeric(HyperbolicHalfPlane), &x)?,
            )
        };
        for (fd, c) in [(0.0, analytic), (1.0, numeric)] {
            out.push(tag(Measured::identity("LCconn_lmm", relative_error(&c, &oracle), 1e-6), &x, which as f64).param("fd", fd));
        }
    }
    Ok(out)
}

fn torsion_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let (g, x, which) = random_metric(rng);
    let (v, w) = (rvec(rng, 2, -2.0, 2.0), rvec(rng, 2, -2.0, 2.0));
    let t = torsion(&ConnectionCoeffs::levi_civita(g), &x, &v, &w)?.norm();
    Ok(vec![tag(Measured::identity("torsionfree_e", t, 1e-10), &x, which)])
}

fn compat_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let (g, x, which) = random_metric(rng);
    let v = rvec(rng, 2, -2.0, 2.0);
    let theta = ConnectionCoeffs::levi_civita(g.clone()).form();
    let fiber: FiberMetric<f64> = Arc::new(move |y| g.eval(y));
    let r = metric_compat_residual(&theta, &fiber, &x, &v)?.norm();
    Ok(vec![tag(Measured::identity("metriccomp_e", r, 1e-8), &x, which)])
}

/// Random symmetric Christoffel field of size `s`.
fn symmetric_field(rng: &mut ChaCha8Rng, s: f64) -> impl Fn(&[f64]) -> Christoffel + Send + Sync + 'static {
    let c = rvec(rng, 8, -1.0, 1.0);
    move |y: &[f64]| {
        Christoffel::from_fn(2, |k, i, j| {
            let (a, b) = (i.min(j), i.max(j));
            s * (c[4 * k + a + b] * y[0] + c[4 * k + 3] * y[1] + (k + a + 2 * b) as f64).sin()
        })
    }
}

fn difference_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let (g, x, which) = random_metric(rng);
    let lc = ConnectionCoeffs::levi_civita(g);
    let s = uniform(rng, 0.1, 1.0);
    let other = lc.perturbed(symmetric_field(rng, s));
    let theta = connection_difference(&other, &lc)?;
    let (v, w) = (rvec(rng, 2, -2.0, 2.0), rvec(rng, 2, -2.0, 2.0));
    let a = theta.at(&x, &v)? * DVector::from_column_slice(&w);
    let b = theta.at(&x, &w)? * DVector::from_column_slice(&v);
    Ok(vec![tag(Measured::identity("LCconn_e1", (a - b).norm(), 1e-12), &x, which)])
}

/// ∇(fξ) = df ⊗ ξ + f∇ξ with df computed analytically.
fn leibniz_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let (g, x, which) = random_metric(rng);
    let theta = ConnectionCoeffs::levi_civita(g).form();
    let c = rvec(rng, 4, -1.0, 1.0);
    let v = rvec(rng, 2, -2.0, 2.0);
    let (a, b, k, d) = (c[0], c[1], c[2], c[3]);
    let f = move |y: &[f64]| (d * y[0] * y[1]).cos();
    let df = -(d * x[0] * x[1]).sin() * d * (x[1] * v[0] + x[0] * v[1]);
    let xi = move |y: &[f64]| DVector::from_vec(vec![(a * y[0] + b * y[1]).sin(), k * y[0] * y[1]]);
    let lhs = covariant_derivative(&theta, |y| xi(y) * f(y), &x, &v)?;
    let rhs = xi(&x) * df + covariant_derivative(&theta, xi, &x, &v)? * f(&x);
    Ok(vec![tag(Measured::identity("na_e3", (lhs - rhs).norm(), 1e-8), &x, which)])
}

/// The vertical part of dξ(v) under the splitting is ∇_vξ.
fn splitting_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let (g, x, which) = random_metric(rng);
    let theta = ConnectionCoeffs::levi_civita(g).form();
    let c: [f64; 3] = std::array::from_fn(|_| uniform(rng, -1.0, 1.0));
    let v = rvec(rng, 2, -2.0, 2.0);
    let xi = move |y: &[f64]| DVector::from_vec(vec![(c[0] * y[0]).cos() * y[1], (c[1] * y[1] + c[2]).sin()]);
    let dxi = DVector::from_vec(vec![
        -c[0] * (c[0] * x[0]).sin() * x[1] * v[0] + (c[0] * x[0]).cos() * v[1],
        c[1] * (c[1] * x[1] + c[2]).cos() * v[1],
    ]);
    let (_, vertical) = horizontal_splitting(&theta, &x, &xi(&x), &v, &dxi)?;
    let nabla = covariant_derivative(&theta, xi, &x, &v)?;
    Ok(vec![tag(Measured::identity("genconn_lmm", (vertical - nabla).norm(), 1e-8), &x, which)])
}

fn tag(m: Measured, x: &[f64], which: f64) -> Measured {
    m.param("metric", which).param("x0", x[0]).param("x1", x[1])
}
