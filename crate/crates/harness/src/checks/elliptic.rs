use std::f64::consts::PI;
use std::sync::Arc;

use geomest_core::complexlin::{AlmostComplex, CrOperator, MapU, SectionAlongU};
use geomest_core::elliptic::{
    cr_interior_estimate, global_estimate, interior_gradient_estimate, interior_lp1_estimate, AnnulusPair,
    CROperatorSpec,
};
use geomest_core::grids::{AnnulusGrid, Grid, GridFunction, TorusGrid};
use geomest_core::riemann::{ChartBox, ConnectionCoeffs, MetricField, RoundSphere};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{uniform, Check, ConstantKey, Ctx, Measured, Suite};
use crate::Result;

pub(super) const CHECKS: &[Check] = &[
    Check { id: "elliptic.interior_lp1", suite: Suite::Elliptic, lemma_id: "elli_lmm1", fitted: true, run: lp1_check },
    Check { id: "elliptic.interior_gradient", suite: Suite::Elliptic, lemma_id: "elli_crl", fitted: true, run: gradient_check },
    Check { id: "elliptic.cr_interior", suite: Suite::Elliptic, lemma_id: "elli_prp1", fitted: true, run: cr_check },
    Check { id: "elliptic.global", suite: Suite::Elliptic, lemma_id: "elli_prp2", fitted: true, run: global_check },
];

/// Outer annulus A₁ = B_{1, 0.2}.
pub const A1: [f64; 2] = [1.0, 0.2];
/// Inset of the inner annulus and exponent of the interior checks.
pub const DELTA: f64 = 0.1;
pub const P: f64 = 4.0;

pub fn elliptic_pair() -> Result<AnnulusPair> {
    Ok(AnnulusPair::inset(A1, DELTA)?)
}

fn annulus(sizes: [usize; 2]) -> Result<Arc<Grid>> {
    Ok(Arc::new(AnnulusGrid::new(A1[0], A1[1], sizes[0], sizes[1])?.into()))
}

fn torus(n: usize) -> Result<Arc<Grid>> {
    Ok(Arc::new(TorusGrid::new(2.0 * PI, 2.0 * PI, n, n)?.into()))
}

fn cplx(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    Complex64::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)) * scale
}

/// Σ c_ab z^a z̄^b with a + b ≤ 3 plus radial-sine angular modes vanishing
/// on both circles of the annulus.
pub fn smooth_data(rng: &mut ChaCha8Rng, grid: &Arc<Grid>) -> GridFunction {
    let mut poly = Vec::new();
    for a in 0..=3 {
        for b in 0..=3 - a {
            poly.push((a, b, cplx(rng, 0.5f64.powi(a + b))));
        }
    }
    let modes: Vec<(f64, i32, Complex64)> =
        (0..3).map(|_| (rng.random_range(1..=3) as f64, rng.random_range(-6..=6), cplx(rng, 0.3))).collect();
    let (outer, inner) = match &**grid {
        Grid::Annulus(g) => (g.outer(), g.inner()),
        _ => (1.0, 0.0),
    };
    GridFunction::sample_complex(grid.clone(), 1, |n, out| {
        let z = Complex64::new(n.cart[0], n.cart[1]);
        let mut v: Complex64 = poly.iter().map(|(a, b, c)| c * z.powi(*a) * z.conj().powi(*b)).sum();
        let s = (n.native[0] - inner) / (outer - inner);
        for (m, k, c) in &modes {
            v += c * (m * PI * s).sin() * Complex64::from_polar(1.0, *k as f64 * n.native[1]);
        }
        out[0] = v;
    })
}

/// D = ∂̄_∇ + A_J on u*TS² for the Levi-Civita connection of the round
/// sphere, with maps confined to θ ∈ [0.3, π − 0.3].
pub fn sphere_spec() -> Result<CROperatorSpec> {
    let g: Arc<dyn MetricField> = Arc::new(RoundSphere);
    let op = CrOperator::tangent(&AlmostComplex::sphere_polar(), &ConnectionCoeffs::levi_civita(g))?.with_nijenhuis()?;
    Ok(CROperatorSpec::new(op, ChartBox::new(vec![0.3, -4.0], vec![PI - 0.3, 4.0])?)?)
}

/// u: annulus → S² in polar coordinates, with random smooth section data.
pub fn cr_pair(rng: &mut ChaCha8Rng, grid: &Arc<Grid>) -> Result<SectionAlongU> {
    let (a, b, c) = (uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, -1.0, 1.0));
    let u = Arc::new(MapU::sample(grid.clone(), 2, move |z| {
        vec![PI / 2.0 + a * z[0] + 0.3 * b * (z[0] * z[1]).sin(), c + 1.5 * z[1] + b * z[0] * z[0]]
    })?);
    let f = smooth_data(rng, grid);
    Ok(SectionAlongU::new(u, f)?)
}

/// Doubly periodic u: T² → S² and a random trig section of u*TS².
pub fn global_pair(rng: &mut ChaCha8Rng, grid: &Arc<Grid>) -> Result<SectionAlongU> {
    let amp = uniform(rng, 0.0, 0.9);
    let (a, b, c, d) = (uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
    let u = Arc::new(MapU::sample(grid.clone(), 2, move |z| {
        vec![PI / 2.0 + amp * (z[0] + c).sin() * (1.0 + 0.3 * z[1].cos()), d + amp * (2.0 * (z[1] + a).sin() + b * z[0].cos())]
    })?);
    let terms: Vec<(i32, i32, f64, f64)> = (0..6)
        .map(|_| (rng.random_range(-3..=3), rng.random_range(-3..=3), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)))
        .collect();
    let f = GridFunction::sample(grid.clone(), 2, |n, out| {
        out.fill(0.0);
        for (i, &(kx, ky, p, q)) in terms.iter().enumerate() {
            let phase = kx as f64 * n.cart[0] + ky as f64 * n.cart[1];
            out[i % 2] += p * phase.cos() + q * phase.sin();
        }
    });
    Ok(SectionAlongU::new(u, f)?)
}

fn key(name: &str) -> ConstantKey {
    ConstantKey::plain(format!("{name}/p={P},delta={DELTA}"))
}

fn lp1_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let grid = annulus(ctx.grids.elliptic_annulus)?;
    let f = smooth_data(rng, &grid);
    Ok(vec![Measured::fitted(interior_lp1_estimate(&f, &elliptic_pair()?, P, 1.0)?, key("elli_lmm1"))])
}

/// The gradient estimate, and its invariance under adding a constant.
fn gradient_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let grid = annulus(ctx.grids.elliptic_annulus)?;
    let pair = elliptic_pair()?;
    let f = smooth_data(rng, &grid);
    let base = interior_gradient_estimate(&f, &pair, P, 1.0)?;
    let c = cplx(rng, 100.0);
    let shifted_data = GridFunction::sample_complex(grid.clone(), 1, |n, out| {
        let v = f.at(n.index);
        out[0] = Complex64::new(v[0], v[1]) + c;
    });
    let shifted = interior_gradient_estimate(&shifted_data, &pair, P, 1.0)?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    let drift = rel(shifted.lhs, base.lhs).max(rel(shifted.structural, base.structural));
    Ok(vec![
        Measured::fitted(base, key("elli_crl")),
        Measured::identity("elli_crl", drift, 1e-9).param("shift_abs", c.norm()),
    ])
}

fn cr_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let grid = annulus(ctx.grids.elliptic_annulus)?;
    let xi = cr_pair(rng, &grid)?;
    let rec = cr_interior_estimate(&xi, &sphere_spec()?, &elliptic_pair()?, P, 1.0)?;
    Ok(vec![Measured::fitted(rec, key("elli_prp1"))])
}

fn global_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let grid = torus(ctx.grids.torus)?;
    let xi = global_pair(rng, &grid)?;
    let g = global_estimate(&xi, &sphere_spec()?, P, 1.0)?;
    Ok(vec![Measured::fitted(g.record, ConstantKey::by_du(format!("elli_prp2/p={P}")))])
}
