use std::f64::consts::PI;
use std::sync::Arc;

use geomest_core::complexlin::{MapU, SectionAlongU};
use geomest_core::grids::{AnnulusGrid, CircleGrid, Grid, GridFunction, RectGrid};
use geomest_core::riemann::{ConnectionCoeffs, MetricField, StereographicSphere};
use geomest_core::sobolev::{
    annulus_mean_zero_l1, c0_embedding, c0_recursion_exponents, closed_parallel_section, convex_mean_value,
    fourier_poincare, l2_from_l1_gradient, loop_pairing_bound, oscillation_bound, pq_embedding, section_c0_bound,
    section_pq_embedding, AnnulusVariant, ConvexMask, SectionSuite,
};
use geomest_core::transport::{MetricBundle, PathCurve};
use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use super::{rvec, uniform, worst_of, Check, ConstantKey, Ctx, Measured, Suite};
use crate::family::{generate, RandomFamily};
use crate::Result;

pub(super) const CHECKS: &[Check] = &[
    Check { id: "sobolev.fourier_poincare", suite: Suite::Sobolev, lemma_id: "poin_lmm1", fitted: false, run: poincare_check },
    Check { id: "sobolev.loop_pairing", suite: Suite::Sobolev, lemma_id: "poincare_prp", fitted: true, run: loop_pairing_check },
    Check { id: "sobolev.annulus_l1", suite: Suite::Sobolev, lemma_id: "ellannbd_crl", fitted: false, run: annulus_check },
    Check { id: "sobolev.convex_mean_value", suite: Suite::Sobolev, lemma_id: "c0plane_lmm", fitted: false, run: convex_check },
    Check { id: "sobolev.c0_embedding", suite: Suite::Sobolev, lemma_id: "c0plane_crl", fitted: true, run: c0_check },
    Check { id: "sobolev.l2_from_l1", suite: Suite::Sobolev, lemma_id: "loj_lmm", fitted: false, run: l2_check },
    Check { id: "sobolev.pq_embedding", suite: Suite::Sobolev, lemma_id: "pqplane_crl", fitted: false, run: pq_check },
    Check { id: "sobolev.section_pq", suite: Suite::Sobolev, lemma_id: "pqplane_lmm", fitted: true, run: section_pq_check },
    Check { id: "sobolev.section_c0", suite: Suite::Sobolev, lemma_id: "c0bound_prp", fitted: true, run: section_c0_check },
    Check { id: "sobolev.recursion", suite: Suite::Sobolev, lemma_id: "c0bound_prp", fitted: false, run: recursion_check },
];

/// Mean-zero polynomials per sample; 100 samples give 1000.
const POINCARE_DRAWS: usize = 10;
/// Recursion exponents per sample.
const RECURSION_DRAWS: usize = 10;
/// Inner radii of the explicit-constant annulus checks.
pub const INNER_RADII: [f64; 3] = [0.01, 0.1, 0.5];
/// Exponent pairs of the planar (p, q) embedding.
pub const PQ_PAIRS: [(f64, f64); 3] = [(4.0 / 3.0, 4.0), (2.0, 4.0), (2.0, 2.0)];
/// Exponent of the planar C⁰ checks.
pub const C0_P: f64 = 4.0;

fn annulus(inner: f64, sizes: [usize; 2]) -> Result<Arc<Grid>> {
    Ok(Arc::new(AnnulusGrid::new(1.0, inner, sizes[0], sizes[1])?.into()))
}

fn function(family: &RandomFamily, grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    generate(family, grid, rng.next_u64())?.into_function()
}

fn sphere_bundle() -> MetricBundle<f64> {
    let g: Arc<dyn MetricField> = Arc::new(StereographicSphere);
    MetricBundle::tangent(g.clone(), &ConnectionCoeffs::levi_civita(g))
}

fn fitted(rec: geomest_core::sobolev::InequalityRecord, key: ConstantKey) -> Measured {
    Measured::fitted(rec, key)
}

/// Random mean-zero polynomials, and the first harmonic where the bound is
/// an equality.
fn poincare_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let n = ctx.grids.circle;
    let grid: Arc<Grid> = Arc::new(CircleGrid::new(n)?.into());
    let family = RandomFamily::trig(n / 4).with_dim(2).mean_zero();
    let mut out = Vec::with_capacity(POINCARE_DRAWS + 1);
    for i in 0..POINCARE_DRAWS {
        out.push(Measured::paper(fourier_poincare(&function(&family, &grid, rng)?)?).param("draw", i as f64));
    }
    let (a, phase) = (uniform(rng, 0.1, 2.0), uniform(rng, 0.0, 2.0 * PI));
    let h = GridFunction::sample(grid, 1, |node, v| v[0] = a * (node.native[0] + phase).cos());
    let rec = fourier_poincare(&h)?;
    out.push(Measured::identity("poin_lmm1", (rec.lhs - rec.structural).abs() / rec.structural, 1e-10).param("harmonic", 1.0));
    Ok(out)
}

fn latitude(rho: f64, n_steps: usize) -> Result<PathCurve> {
    Ok(PathCurve::new(
        0.0,
        2.0 * PI,
        move |t| vec![rho * t.cos(), rho * t.sin()],
        move |t| vec![-rho * t.sin(), rho * t.cos()],
        n_steps,
    )?)
}

/// Near-parallel closed sections along a stereographic latitude.
fn loop_pairing_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let grid: Arc<Grid> = Arc::new(CircleGrid::new(ctx.grids.loop_circle)?.into());
    let bundle = sphere_bundle();
    let rho = uniform(rng, 0.2, 1.5);
    let alpha = latitude(rho, 8 * ctx.grids.transport_steps)?;
    let section = |rng: &mut ChaCha8Rng| -> Result<GridFunction> {
        let c = rvec(rng, 2, -1.0, 1.0);
        let eps = uniform(rng, 0.0, 0.1);
        let par = closed_parallel_section(&alpha, &bundle.connection, &grid, &c)?;
        let noise = function(&RandomFamily::trig(6).with_dim(2).with_amplitude(eps), &grid, rng)?;
        Ok(par.add(&noise)?)
    };
    let (xi, zeta) = (section(rng)?, section(rng)?);
    let rec = loop_pairing_bound(&alpha, &bundle, &xi, &zeta, 1.0)?;
    Ok(vec![fitted(rec, ConstantKey::plain("poincare_prp")).param("rho", rho)])
}

/// Both constants of the mean-zero L¹ bound at every inner radius.
fn annulus_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let family = RandomFamily::trig(8).with_dim(2).mean_zero();
    let mut out = Vec::new();
    for r in INNER_RADII {
        let f = function(&family, &annulus(r, ctx.grids.annulus)?, rng)?;
        out.push(Measured::paper(annulus_mean_zero_l1(&f, AnnulusVariant::Log)?));
        out.push(Measured::paper(annulus_mean_zero_l1(&f, AnnulusVariant::Uniform)?));
    }
    Ok(out)
}

fn random_mask(rng: &mut ChaCha8Rng) -> (ConvexMask, f64) {
    let kind = uniform(rng, 0.0, 3.0).floor();
    let center = [uniform(rng, -0.4, 0.4), uniform(rng, -0.4, 0.4)];
    let mask = match kind as u8 {
        0 => ConvexMask::Disk { center, radius: uniform(rng, 0.25, 0.6) },
        1 => ConvexMask::HalfDisk { center, radius: uniform(rng, 0.3, 0.6), direction: uniform(rng, 0.0, 2.0 * PI) },
        _ => {
            let radius = uniform(rng, 0.5, 0.95);
            ConvexMask::Wedge {
                radius,
                start: uniform(rng, 0.0, 2.0 * PI),
                opening: uniform(rng, 0.6, PI),
                chord: uniform(rng, 0.0, 0.3 * radius),
            }
        }
    };
    (mask, kind)
}

fn convex_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let n = 2 * ctx.grids.rect - 1;
    let grid: Arc<Grid> = Arc::new(RectGrid::new(-1.0, 1.0, -1.0, 1.0, n, n)?.into());
    let f = function(&RandomFamily::trig(6).with_dim(2), &grid, rng)?;
    let (mask, kind) = random_mask(rng);
    let inside: Vec<usize> = grid.nodes().filter(|y| mask.contains(y.cart).unwrap_or(false)).map(|y| y.index).collect();
    let node = inside[(rng.next_u64() % inside.len() as u64) as usize];
    Ok(vec![Measured::paper(convex_mean_value(&f, &mask, node)?).param("mask", kind)])
}

/// Draws per C_p record; the worst one is kept.
const C0_DRAWS: usize = 4;

/// Oscillation and C⁰ bounds share the constant C_p.
fn c0_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let key = ConstantKey::plain(format!("C_p/p={C0_P}"));
    let mut data = Vec::with_capacity(C0_DRAWS);
    for _ in 0..C0_DRAWS {
        let r = uniform(rng, 0.05, 0.5);
        data.push((r, function(&RandomFamily::radial_bump(4).with_dim(2), &annulus(r, ctx.grids.annulus)?, rng)?));
    }
    let mut draws = data.iter();
    let osc = worst_of(C0_DRAWS, || {
        let (r, f) = draws.next().expect("one datum per draw");
        Ok(fitted(oscillation_bound(f, C0_P, 1.0)?, key.clone()).param("r", *r))
    })?;
    let mut draws = data.iter();
    let c0 = worst_of(C0_DRAWS, || {
        let (r, f) = draws.next().expect("one datum per draw");
        Ok(fitted(c0_embedding(f, C0_P, 1.0)?, key.clone()).param("r", *r))
    })?;
    Ok(vec![osc, c0])
}

fn supported_family() -> RandomFamily {
    RandomFamily::radial_bump(4).with_dim(2).supported()
}

fn l2_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let mut out = Vec::new();
    for r in INNER_RADII {
        let f = function(&supported_family(), &annulus(r, ctx.grids.annulus)?, rng)?;
        out.push(Measured::paper(l2_from_l1_gradient(&f)?));
    }
    Ok(out)
}

fn pq_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let mut out = Vec::new();
    for r in INNER_RADII {
        let f = function(&supported_family(), &annulus(r, ctx.grids.annulus)?, rng)?;
        for (p, q) in PQ_PAIRS {
            out.push(Measured::paper(pq_embedding(&f, p, q)?));
        }
    }
    Ok(out)
}

/// u(z) = s·z + shift + b·(z₂², 0) into the stereographic sphere.
fn sphere_map(rng: &mut ChaCha8Rng, grid: &Arc<Grid>) -> Result<Arc<MapU>> {
    let s = uniform(rng, 0.1, 2.0);
    let shift = rvec(rng, 2, -0.3, 0.3);
    let b = uniform(rng, -0.3, 0.3);
    Ok(Arc::new(MapU::sample(grid.clone(), 2, move |z| vec![s * z[0] + shift[0] + b * z[1] * z[1], s * z[1] + shift[1]])?))
}

fn section_pq_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let grid = annulus(0.1, ctx.grids.annulus)?;
    let u = sphere_map(rng, &grid)?;
    let xi = SectionAlongU::new(u, function(&supported_family(), &grid, rng)?)?;
    let suite = SectionSuite::new(sphere_bundle());
    let (p, q) = (2.0, 4.0);
    Ok(vec![fitted(section_pq_embedding(&suite, &xi, p, q, 1.0)?, ConstantKey::by_du("pqplane_lmm/p=2,q=4"))])
}

fn section_c0_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let grid = annulus(0.2, ctx.grids.annulus)?;
    let u = sphere_map(rng, &grid)?;
    let xi = SectionAlongU::new(u, function(&RandomFamily::trig(4).with_dim(2), &grid, rng)?)?;
    let suite = SectionSuite::new(sphere_bundle());
    Ok(vec![fitted(section_c0_bound(&suite, &xi, C0_P, 1.0)?, ConstantKey::by_du(format!("c0bound_prp/p={C0_P}")))])
}

/// Exponents strictly decrease for random p; p = 4 stops after one step at
/// q₁ = 12, q₂ = 3.
fn recursion_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let mut out = Vec::with_capacity(RECURSION_DRAWS + 1);
    for i in 0..RECURSION_DRAWS {
        let p = 2.0 + (1.0 - uniform(rng, 0.0, 1.0)) * 48.0;
        let qs = c0_recursion_exponents(p)?.qs();
        let bad = qs.windows(2).filter(|w| !(w[1] < w[0])).count();
        out.push(Measured::identity("c0bound_prp", bad as f64, 0.0).param("p", p).param("n", (qs.len() - 1) as f64).param("draw", i as f64));
    }
    let t = c0_recursion_exponents(4.0)?;
    let qs = t.qs();
    let miss = (t.n() as f64 - 1.0).abs() + (qs[0] - 12.0).abs() + (qs[1] - 3.0).abs();
    out.push(Measured::identity("c0bound_prp", miss, 1e-12).param("p", 4.0));
    Ok(out)
}
