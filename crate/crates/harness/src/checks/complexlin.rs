use std::f64::consts::PI;
use std::sync::Arc;

use geomest_core::complexlin::{
    admissibility_check, bundle_dbar, covariant_j_residual, cr_pullback, d_js_bracket_form, d_js_operator, dbar_map,
    dbar_compatibility_residual, incompatible_connection_example, induced_total_j, j_linear_connection, nijenhuis,
    nonlinear_dbar, splitting_residual, AdmissibilityProbe, AlmostComplex, CrOperator, DbarForm, HolomorphicPatch,
    MapU, OneForm, SectionAlongU, SectionNorms,
};
use geomest_core::grids::{CircleGrid, Grid, GridFunction, TorusGrid};
use geomest_core::riemann::{ChartBox, Christoffel, ConnectionCoeffs, ConnectionForm, MetricField, RoundSphere};
use geomest_core::transport::ExpLikeMap;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use super::{log_slope, rvec, uniform, Check, Ctx, Measured, Suite};
use crate::Result;

pub(super) const CHECKS: &[Check] = &[
    Check { id: "complexlin.dbar_map", suite: Suite::Complexlin, lemma_id: "dbarJjdfn_e", fitted: false, run: dbar_map_check },
    Check { id: "complexlin.bundle_dbar", suite: Suite::Complexlin, lemma_id: "dbar_dfn_e", fitted: false, run: bundle_dbar_check },
    Check { id: "complexlin.total_j", suite: Suite::Complexlin, lemma_id: "complexstr_lmm1", fitted: false, run: total_j_check },
    Check { id: "complexlin.compatible", suite: Suite::Complexlin, lemma_id: "dbarconn_lmm", fitted: false, run: compatible_check },
    Check { id: "complexlin.nijenhuis", suite: Suite::Complexlin, lemma_id: "Nijendfn_e", fitted: false, run: nijenhuis_check },
    Check { id: "complexlin.j_linear", suite: Suite::Complexlin, lemma_id: "Jconn_e", fitted: false, run: j_linear_check },
    Check { id: "complexlin.djs_independence", suite: Suite::Complexlin, lemma_id: "DJSi_e", fitted: false, run: djs_check },
    Check { id: "complexlin.djs_bracket", suite: Suite::Complexlin, lemma_id: "DJSIintr_e", fitted: false, run: bracket_check },
    Check { id: "complexlin.cr_pullback", suite: Suite::Complexlin, lemma_id: "Dcomm_e", fitted: false, run: pullback_check },
    Check { id: "complexlin.nonlinear", suite: Suite::Complexlin, lemma_id: "dbar_prp", fitted: false, run: nonlinear_check },
    Check { id: "complexlin.admissible", suite: Suite::Complexlin, lemma_id: "norms_dfn", fitted: false, run: admissible_check },
];

/// Draws of J̃ per sample; 100 samples give 1000 triples.
const TOTAL_J_DRAWS: usize = 10;

fn torus(n: usize) -> Result<Arc<Grid>> {
    Ok(Arc::new(TorusGrid::new(2.0 * PI, 2.0 * PI, n, n)?.into()))
}


fn rcomplex(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(r, c, |_, _| Complex64::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)))
}

fn rcvec(rng: &mut ChaCha8Rng, k: usize) -> DVector<Complex64> {
    DVector::from_iterator(k, rcomplex(rng, k, 1).iter().copied())
}

/// θ(x)(w) = A w₀ + B w₁ + C (x₀w₁ − x₁w₀).
fn position_form(rng: &mut ChaCha8Rng, k: usize) -> ConnectionForm<Complex64> {
    let (a, b, c) = (rcomplex(rng, k, k), rcomplex(rng, k, k), rcomplex(rng, k, k));
    ConnectionForm::new(k, 2, move |x: &[f64], w: &[f64]| {
        Ok(&a * Complex64::from(w[0]) + &b * Complex64::from(w[1]) + &c * Complex64::from(x[0] * w[1] - x[1] * w[0]))
    })
}

/// Sum of c·sin/cos of low modes in each component.
fn trig_components(rng: &mut ChaCha8Rng, dim: usize, amp: f64) -> impl Fn(&[f64; 2]) -> Vec<f64> + Clone {
    let c = rvec(rng, 6 * dim, -1.0, 1.0);
    move |z: &[f64; 2]| {
        (0..dim)
            .map(|k| {
                let c = &c[6 * k..6 * k + 6];
                amp * (c[0] * (z[0] + c[1]).sin() + c[2] * (z[1] + c[3]).cos() + c[4] * (z[0] - z[1] + c[5]).sin())
                    / 3.0
            })
            .collect()
    }
}

fn dbar_map_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let s = uniform(rng, 0.2, 1.0);
    let j = AlmostComplex::twisted_r4(s);
    let u = MapU::sample(torus(ctx.grids.torus)?, 4, trig_components(rng, 4, 1.5))?;
    let d = dbar_map(&u, &j)?;
    let defect = d.type01_defect(|k| j.at(u.point(k)))?;
    Ok(vec![Measured::identity("dbarJjdfn_e", defect, 1e-10).param("strength", s)])
}

fn complex_field(grid: Arc<Grid>, f: impl Fn(Complex64) -> Vec<Complex64>) -> GridFunction {
    let k = f(Complex64::new(0.0, 0.0)).len();
    GridFunction::sample_complex(grid, k, |node, out| out.copy_from_slice(&f(Complex64::new(node.cart[0], node.cart[1]))))
}

/// Random Σ c_k e^{i(k₁x + k₂y)} with |k_i| ≤ 3 in each of `rank` components.
fn torus_field(rng: &mut ChaCha8Rng, grid: Arc<Grid>, rank: usize) -> GridFunction {
    let terms: Vec<(f64, f64, Complex64)> = (0..4 * rank)
        .map(|_| (uniform(rng, -3.5, 3.5).round(), uniform(rng, -3.5, 3.5).round(), rcomplex(rng, 1, 1)[0]))
        .collect();
    complex_field(grid, move |z| {
        (0..rank)
            .map(|r| {
                terms[4 * r..4 * r + 4]
                    .iter()
                    .map(|(a, b, c)| c * Complex64::from_polar(1.0, a * z.re + b * z.im))
                    .sum()
            })
            .collect()
    })
}

/// Leibniz rule ∂̄(f₀ξ) = (∂̄f₀)ξ + f₀ ∂̄ξ on resolved torus modes.
fn bundle_dbar_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let grid = torus(ctx.grids.torus)?;
    let theta = DbarForm::from_form(&position_form(rng, 2))?;
    let xi = torus_field(rng, grid.clone(), 2);
    let f0 = torus_field(rng, grid.clone(), 1);
    let cx = |v: &[f64]| -> Vec<Complex64> { v.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect() };
    let prod = GridFunction::sample_complex(grid.clone(), 2, |n, out| {
        let s = cx(f0.at(n.index))[0];
        for (o, x) in out.iter_mut().zip(cx(xi.at(n.index))) {
            *o = s * x;
        }
    });
    let lhs = bundle_dbar(&theta, &prod)?;
    let d0 = bundle_dbar(&DbarForm::zero(1), &f0)?;
    let d = bundle_dbar(&theta, &xi)?;
    let (mut worst, mut scale): (f64, f64) = (0.0, 0.0);
    for node in grid.nodes() {
        let k = node.index;
        let (s, x) = (cx(f0.at(k))[0], cx(xi.at(k)));
        for (l, (a, b)) in [(lhs.at(k).0, (d0.at(k).0, d.at(k).0)), (lhs.at(k).1, (d0.at(k).1, d.at(k).1))] {
            let (l, a, b) = (cx(l.as_slice()), cx(a.as_slice())[0], cx(b.as_slice()));
            for r in 0..2 {
                worst = worst.max((l[r] - (a * x[r] + s * b[r])).norm());
                scale = scale.max(l[r].norm());
            }
        }
    }
    Ok(vec![Measured::identity("dbar_dfn_e", worst / scale.max(1.0), 1e-8)])
}

fn total_j_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let mut out = Vec::with_capacity(TOTAL_J_DRAWS);
    for i in 0..TOTAL_J_DRAWS {
        let k = 1 + i % 3;
        let theta = DbarForm::from_form(&position_form(rng, k))?;
        let c = rcvec(rng, k);
        let x = rvec(rng, 2, -1.0, 1.0);
        let j = induced_total_j(&theta, &x, &c)?;
        let n = j.nrows();
        let defect = (&j * &j + DMatrix::identity(n, n)).norm();
        out.push(Measured::identity("complexstr_lmm1", defect, 1e-12).param("rank", k as f64).param("draw", i as f64));
    }
    Ok(out)
}

/// Compatible connections intertwine J̃ with j; the built-in incompatible
/// example does not, which the second record asserts as lhs ≤ residual.
fn compatible_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let form = position_form(rng, 2);
    let theta = DbarForm::from_form(&form)?;
    let x = rvec(rng, 2, -1.0, 1.0);
    let c = rcvec(rng, 2);
    let w = rvec(rng, 2, -1.0, 1.0);
    let r = dbar_compatibility_residual(&theta, &form, &x)?.max(splitting_residual(&theta, &form, &x, &c, &w)?);

    let (bad, conn) = incompatible_connection_example();
    let xb = rvec(rng, 2, -1.0, 1.0);
    let rb = dbar_compatibility_residual(&bad, &conn, &xb)?;
    Ok(vec![
        Measured::identity("dbarconn_lmm", r, 1e-7).param("compatible", 1.0),
        Measured::identity("dbarconn_lmm", 1e-3, rb).param("compatible", 0.0),
    ])
}

fn nijenhuis_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let j = AlmostComplex::twisted_r4(uniform(rng, 0.2, 1.0));
    let x = rvec(rng, 4, -1.0, 1.0);
    let (v, w) = (rvec(rng, 4, -1.0, 1.0), rvec(rng, 4, -1.0, 1.0));
    let a = nijenhuis(&j, &x, &v, &w)?;
    let b = nijenhuis(&j, &x, &w, &v)?;
    let jx = j.at(&x)?;
    let jv = &jx * DVector::from_column_slice(&v);
    let c = nijenhuis(&j, &x, jv.as_slice(), &w)?;
    Ok(vec![
        Measured::identity("Nijendfn_e", (&a + &b).amax(), 1e-6).param("property", 0.0),
        Measured::identity("Nijendfn_e", (c + &jx * &a).amax(), 1e-6).param("property", 1.0),
    ])
}

/// Random symmetric Christoffel field on ℝ⁴ of size `scale`.
fn symmetric_perturbation(rng: &mut ChaCha8Rng, scale: f64) -> impl Fn(&[f64]) -> Christoffel + Send + Sync + 'static {
    let c = rvec(rng, 4, -1.0, 1.0);
    move |x: &[f64]| {
        Christoffel::from_fn(4, |k, i, l| {
            let (a, b) = (i.min(l) as f64, i.max(l) as f64);
            scale * ((k as f64 + 1.0 + c[0]) * x[0] + a * x[1] - b * x[2] + c[1] * x[3] * a * b + c[2] * a + c[3] * k as f64).sin()
        })
    }
}

fn j_linear_check(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let j = AlmostComplex::twisted_r4(uniform(rng, 0.2, 1.0));
    let base = ConnectionCoeffs::flat(4).perturbed(symmetric_perturbation(rng, 0.3));
    let cj = j_linear_connection(&base, &j)?;
    let x = rvec(rng, 4, -1.0, 1.0);
    Ok(vec![Measured::identity("Jconn_e", covariant_j_residual(&j, &cj, &x)?, 1e-8)])
}

/// Random quadratic vector field on ℝ⁴.
fn polynomial_field(rng: &mut ChaCha8Rng) -> impl Fn(&[f64]) -> DVector<f64> {
    let a = rvec(rng, 4, -1.0, 1.0);
    let b = rvec(rng, 16, -1.0, 1.0);
    let c = rvec(rng, 64, -1.0, 1.0);
    move |y: &[f64]| {
        DVector::from_fn(4, |k, _| {
            let mut s = a[k];
            for i in 0..4 {
                s += b[k * 4 + i] * y[i];
                for l in 0..4 {
                    s += c[(k * 4 + i) * 4 + l] * y[i] * y[l];
                }
            }
            s
        })
    }
}

fn plane_patch(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<HolomorphicPatch> {
    let center = [uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5)];
    Ok(HolomorphicPatch::coordinate_plane(4, center, uniform(rng, 0.2, 0.6), CircleGrid::new(ctx.grids.loop_circle / 4)?)?)
}

/// D_{J;Σ} for a flat and a symmetrically perturbed connection, and its
/// preservation of sections tangent to the plane.
fn djs_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let j = AlmostComplex::twisted_r4(uniform(rng, 0.2, 1.0));
    let patch = plane_patch(ctx, rng)?;
    let field = polynomial_field(rng);
    let along = |z: &[f64]| field(&patch.point(z));
    let flat = ConnectionCoeffs::flat(4);
    let bent = flat.perturbed(symmetric_perturbation(rng, 0.3));
    let a = d_js_operator(&j, &flat, &patch, &along)?;
    let b = d_js_operator(&j, &bent, &patch, &along)?;
    let independence = a.sub(&b)?.max_abs();

    let t = polynomial_field(rng);
    let tangent = |z: &[f64]| {
        let v = t(&patch.point(z));
        DVector::from_vec(vec![v[0], v[1], 0.0, 0.0])
    };
    let d = d_js_operator(&j, &bent, &patch, &tangent)?;
    let mut normal: f64 = 0.0;
    for k in 0..patch.grid().node_count() {
        let (x, y) = d.at(k);
        normal = normal.max(x[2].abs()).max(x[3].abs()).max(y[2].abs()).max(y[3].abs());
    }
    Ok(vec![
        Measured::identity("DJSi_e", independence, 1e-7),
        Measured::identity("DJSIrestr_e", normal, 1e-6),
    ])
}

/// The operator on ∂_x against ½([ζ, ξ] + J[Jζ, ξ]) with ζ = ∂_x.
fn bracket_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let j = if uniform(rng, 0.0, 1.0) < 0.5 { AlmostComplex::standard(2) } else { AlmostComplex::twisted_r4(0.8) };
    let patch = plane_patch(ctx, rng)?;
    let field = polynomial_field(rng);
    let along = |z: &[f64]| field(&patch.point(z));
    let d = d_js_operator(&j, &ConnectionCoeffs::flat(4), &patch, &along)?;
    let scale = d.max_abs().max(1e-3);
    let e1 = |_: &[f64]| DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
    let mut worst: f64 = 0.0;
    for k in 0..patch.grid().node_count() {
        let x = patch.point(&patch.node_param(k));
        let b = d_js_bracket_form(&j, &e1, &field, &x)?;
        worst = worst.max((d.at(k).0 - b).amax() / scale);
    }
    Ok(vec![Measured::identity("DJSIintr_e", worst, 1e-5)])
}

/// D_u for a complex connection Θ equals ∂̄ + (u*Θ)^{0,1} on the pullback.
fn pullback_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let (m1, m2, m3) = (rcomplex(rng, 2, 2), rcomplex(rng, 2, 2), rcomplex(rng, 2, 2));
    let big_theta = ConnectionForm::new(2, 2, move |x: &[f64], w: &[f64]| {
        Ok(&m1 * Complex64::from(w[0]) + &m2 * Complex64::from(w[1]) + &m3 * Complex64::from(x[0] * w[1] - x[1] * w[0]))
    });
    let c: [f64; 4] = std::array::from_fn(|_| uniform(rng, 0.2, 1.0));
    let uf = move |z: &[f64; 2]| vec![c[0] * (z[0] + c[2]).sin(), c[1] * (z[1] - c[3]).cos()];
    let ux = move |z: &[f64; 2]| vec![c[0] * (z[0] + c[2]).cos(), 0.0];
    let uy = move |z: &[f64; 2]| vec![0.0, -c[1] * (z[1] - c[3]).sin()];
    let u = Arc::new(MapU::with_derivatives(torus(ctx.grids.torus)?, 2, uf, ux, uy)?);
    let xi = SectionAlongU::sample(u.clone(), 4, {
        let f = trig_components(rng, 4, 1.0);
        move |z, _| f(z)
    });
    let op = CrOperator::complex(&AlmostComplex::standard(1), &big_theta)?;
    let d = cr_pullback(&op, &xi)?;

    let bt = big_theta.clone();
    let pulled = ConnectionForm::new(2, 2, move |z: &[f64], v: &[f64]| {
        let z = [z[0], z[1]];
        let (p, a, b) = (uf(&z), ux(&z), uy(&z));
        let w = [a[0] * v[0] + b[0] * v[1], a[1] * v[0] + b[1] * v[1]];
        bt.at(&p, &w)
    });
    let reference = bundle_dbar(&DbarForm::from_form(&pulled)?, xi.values())?;
    Ok(vec![Measured::identity("Dcomm_e", d.sub(&reference)?.max_abs(), 1e-9)])
}

/// N(ξ) = ∂̄(exp_u ξ) − ∂̄u − D_uξ: zero at ξ = 0, quadratic in the scale of
/// ξ on the round sphere, and identically zero for a flat target.
fn nonlinear_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let grid = torus(ctx.grids.torus)?;
    let uc = rvec(rng, 4, -1.0, 1.0);
    let u = Arc::new(MapU::sample(grid.clone(), 2, move |z| {
        vec![PI / 2.0 + 0.4 * (z[0] + uc[0]).sin() * (z[1] + uc[1]).cos(), 0.5 * (z[1] + uc[2]).sin() + 0.3 * (z[0] + uc[3]).cos()]
    })?);
    let s: Arc<dyn MetricField> = Arc::new(RoundSphere);
    let exp = ExpLikeMap::riemannian(s.clone());
    let lc = ConnectionCoeffs::levi_civita(s);
    let j = AlmostComplex::sphere_polar();

    let zero = nonlinear_dbar(&SectionAlongU::zeros(u.clone(), 2), &exp, &j, &lc)?.remainder.max_abs();
    let f = trig_components(rng, 2, 1.0);
    let xi = SectionAlongU::sample(u, 2, move |z, _| f(z));
    let ts = [0.2, 0.1, 0.05];
    let mut norms = Vec::with_capacity(3);
    for t in ts {
        norms.push(nonlinear_dbar(&xi.scaled(t), &exp, &j, &lc)?.remainder.lp_norm(4.0));
    }
    let slope = log_slope(&ts, &norms);

    let g = trig_components(rng, 4, 1.0);
    let u4 = Arc::new(MapU::sample(grid, 4, g)?);
    let h = trig_components(rng, 4, 0.3);
    let xi4 = SectionAlongU::sample(u4, 4, move |z, _| h(z));
    let flat = ConnectionCoeffs::flat(4);
    let exp4 = ExpLikeMap::new(flat.clone(), ChartBox::cube(4, 10.0))?;
    let flat_n = nonlinear_dbar(&xi4, &exp4, &AlmostComplex::standard(2), &flat)?.remainder.max_abs();

    Ok(vec![
        Measured::identity("dbar_prp", zero, 0.0).param("case", 0.0),
        Measured::identity("dbar_prp", (slope - 2.0).abs(), 0.1).param("case", 1.0).param("slope", slope),
        Measured::identity("dbar_prp", flat_n, 1e-10).param("case", 2.0),
    ])
}

/// The standard L^p / L^p_1 / C⁰ triple on random probes.
fn admissible_check(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let grid = torus(ctx.grids.torus)?;
    let u = Arc::new(MapU::sample(grid.clone(), 2, |_| vec![0.0, 0.0])?);
    let mut probes = Vec::new();
    for _ in 0..4 {
        let c = rvec(rng, 12, -1.0, 1.0);
        let trig = move |k: usize, z: &[f64; 2]| c[k] * (z[0] + c[k + 1]).sin() + c[k + 2] * (2.0 * z[1] - c[k + 3]).cos();
        let multiplier = GridFunction::sample(grid.clone(), 1, |n, out| out[0] = trig(0, &n.cart));
        let dx = GridFunction::sample(grid.clone(), 2, |n, out| {
            out[0] = trig(4, &n.cart);
            out[1] = trig(8, &n.cart);
        });
        let dy = GridFunction::sample(grid.clone(), 2, |n, out| {
            out[0] = trig(2, &n.cart);
            out[1] = trig(6, &n.cart);
        });
        let section = SectionAlongU::sample(u.clone(), 2, move |z, _| vec![trig(1, z), trig(5, z)]);
        probes.push(AdmissibilityProbe { multiplier, form: OneForm::new(dx, dy)?, section });
    }
    let p = uniform(rng, 2.5, 8.0);
    let report = admissibility_check(&SectionNorms::new(p, ConnectionForm::zero(2, 2))?, &probes)?;
    let failed = report.conditions.iter().filter(|c| !**c).count();
    Ok(vec![Measured::identity("norms_dfn", failed as f64, 0.0)
        .param("p", p)
        .param("multiplier_ratio", report.multiplier_ratio)
        .param("rotation_defect", report.rotation_defect)
        .param("derivative_ratio", report.derivative_ratio)
        .param("c0_constant", report.c0_constant)])
}
