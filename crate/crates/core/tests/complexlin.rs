use std::f64::consts::PI;
use std::sync::Arc;

use geomest_core::complexlin::*;
use geomest_core::grids::{AnnulusGrid, CircleGrid, Grid, GridFunction, RectGrid, TorusGrid};
use geomest_core::linalg::{realify, standard_complex_structure};
use geomest_core::riemann::*;
use geomest_core::transport::ExpLikeMap;
use geomest_core::GeomError;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rect(n: usize) -> Arc<Grid> {
    Arc::new(RectGrid::new(-1.0, 1.0, -1.0, 1.0, n, n).unwrap().into())
}

fn torus(n: usize) -> Arc<Grid> {
    Arc::new(TorusGrid::new(2.0 * PI, 2.0 * PI, n, n).unwrap().into())
}

fn rvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn rcomplex(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(r, c, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn cplx(v: &[f64]) -> Vec<Complex64> {
    v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

fn slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

// ---- ∂̄ on maps ----

#[test]
fn dbar_of_identity_vanishes() {
    let u = MapU::sample(rect(33), 2, |z| vec![z[0], z[1]]).unwrap();
    let d = dbar_map(&u, &AlmostComplex::standard(1)).unwrap();
    assert!(d.max_abs() < 1e-12);
}

#[test]
fn dbar_of_conjugation_is_unit() {
    let u = MapU::sample(rect(33), 2, |z| vec![z[0], -z[1]]).unwrap();
    let d = dbar_map(&u, &AlmostComplex::standard(1)).unwrap();
    for k in 0..u.grid().node_count() {
        let (a, b) = d.at(k);
        assert!((a - DVector::from_vec(vec![1.0, 0.0])).amax() < 1e-12);
        assert!((b - DVector::from_vec(vec![0.0, -1.0])).amax() < 1e-12);
    }
    assert!(d.dx().pointwise_norm().iter().all(|n| (n - 1.0).abs() < 1e-12));
}

#[test]
fn dbar_of_square_on_annulus_vanishes() {
    let grid: Arc<Grid> = Arc::new(AnnulusGrid::new(1.0, 0.5, 64, 64).unwrap().into());
    let u = MapU::sample(grid, 2, |z| vec![z[0] * z[0] - z[1] * z[1], 2.0 * z[0] * z[1]]).unwrap();
    let d = dbar_map(&u, &AlmostComplex::standard(1)).unwrap();
    assert!(d.max_abs() < 1e-8, "{}", d.max_abs());
}

#[test]
fn dbar_output_is_01_for_twisted_structure() {
    let j = AlmostComplex::twisted_r4(0.8);
    let u = MapU::sample(torus(32), 4, |z| {
        vec![z[0].sin(), (z[1] + 0.3).cos(), 0.5 * (z[0] + z[1]).sin(), 0.4 * z[1].cos()]
    })
    .unwrap();
    let d = dbar_map(&u, &j).unwrap();
    let defect = d.type01_defect(|k| j.at(u.point(k))).unwrap();
    assert!(defect < 1e-10, "{defect}");
    assert!(d.max_abs() > 0.1);
}

#[test]
fn maps_need_planar_grids() {
    let circle: Arc<Grid> = Arc::new(CircleGrid::new(16).unwrap().into());
    assert!(matches!(MapU::sample(circle, 2, |z| z.to_vec()), Err(GeomError::InvalidArgument(_))));
}

// ---- ∂̄ on bundles ----

fn complex_field(grid: Arc<Grid>, f: impl Fn(Complex64) -> Vec<Complex64>) -> GridFunction {
    let k = f(Complex64::new(0.0, 0.0)).len();
    GridFunction::sample_complex(grid, k, |node, out| {
        out.copy_from_slice(&f(Complex64::new(node.cart[0], node.cart[1])))
    })
}

#[test]
fn bundle_dbar_holomorphic_and_conjugate() {
    let g = rect(41);
    let f = complex_field(g.clone(), |z| vec![z * z, z + 1.0]);
    let d = bundle_dbar(&DbarForm::zero(2), &f).unwrap();
    assert!(d.max_abs() < 1e-10);

    let f = complex_field(g, |z| vec![z.conj()]);
    let d = bundle_dbar(&DbarForm::zero(1), &f).unwrap();
    for k in 0..f.grid().node_count() {
        let (a, b) = d.at(k);
        assert!((a[0] - 1.0).abs() < 1e-12 && a[1].abs() < 1e-12);
        assert!(b[0].abs() < 1e-12 && (b[1] + 1.0).abs() < 1e-12);
    }
}

#[test]
fn bundle_dbar_constant_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mu = rcomplex(&mut rng, 2, 2);
    let theta = DbarForm::constant(mu.clone()).unwrap();
    let g = rect(41);
    let f = complex_field(g.clone(), |z| vec![z, z * z]);
    let d = bundle_dbar(&theta, &f).unwrap();
    for node in g.nodes() {
        let z = Complex64::new(node.cart[0], node.cart[1]);
        let expect = &mu * DVector::from_vec(vec![z, z * z]);
        let (a, b) = d.at(node.index);
        let (a, b) = (cplx(a.as_slice()), cplx(b.as_slice()));
        for r in 0..2 {
            assert!((a[r] - expect[r]).norm() < 1e-10);
            assert!((b[r] + Complex64::i() * expect[r]).norm() < 1e-10);
        }
    }
}

fn position_form(rng: &mut ChaCha8Rng, k: usize) -> ConnectionForm<Complex64> {
    let (a, b, c) = (rcomplex(rng, k, k), rcomplex(rng, k, k), rcomplex(rng, k, k));
    ConnectionForm::new(k, 2, move |x, v| {
        let s = Complex64::from(x[0].sin() + 0.5 * x[1].cos());
        Ok(&a * Complex64::from(v[0]) + &b * Complex64::from(v[1]) + &c * (s * v[0]))
    })
}

#[test]
fn bundle_dbar_leibniz_and_linearity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let theta = DbarForm::from_form(&position_form(&mut rng, 2)).unwrap();
    let g = torus(48);
    let f = complex_field(g.clone(), |z| vec![(Complex64::i() * (z.re + z.im)).exp(), Complex64::from((2.0 * z.re).cos())]);
    let f0 = complex_field(g.clone(), |z| vec![Complex64::new(z.re.cos(), z.im.sin())]);
    let prod = complex_field(g.clone(), |z| {
        let s = Complex64::new(z.re.cos(), z.im.sin());
        vec![s * (Complex64::i() * (z.re + z.im)).exp(), s * (2.0 * z.re).cos()]
    });
    let lhs = bundle_dbar(&theta, &prod).unwrap();
    let df0 = bundle_dbar(&DbarForm::zero(1), &f0).unwrap();
    let df = bundle_dbar(&theta, &f).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..g.node_count() {
        let s = cplx(f0.at(k))[0];
        let fv = cplx(f.at(k));
        let (l, _) = lhs.at(k);
        let (d0, _) = df0.at(k);
        let (d, _) = df.at(k);
        let (l, d0, d) = (cplx(l.as_slice()), cplx(d0.as_slice())[0], cplx(d.as_slice()));
        for r in 0..2 {
            worst = worst.max((l[r] - (d0 * fv[r] + s * d[r])).norm());
        }
    }
    assert!(worst < 1e-8, "{worst}");

    let (a, b) = (Complex64::new(1.0, 2.0), Complex64::new(0.0, -0.5));
    let h = complex_field(g.clone(), |z| vec![Complex64::from(z.im.sin()), Complex64::from(z.re.cos() * z.im.cos())]);
    let combo = GridFunction::new(
        g.clone(),
        4,
        f.values()
            .chunks(2)
            .zip(h.values().chunks(2))
            .flat_map(|(p, q)| {
                let w = a * Complex64::new(p[0], p[1]) + b * Complex64::new(q[0], q[1]);
                [w.re, w.im]
            })
            .collect(),
    )
    .unwrap();
    let dc = bundle_dbar(&theta, &combo).unwrap();
    let dh = bundle_dbar(&theta, &h).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..g.node_count() {
        let (x, _) = dc.at(k);
        let (p, _) = df.at(k);
        let (q, _) = dh.at(k);
        let (x, p, q) = (cplx(x.as_slice()), cplx(p.as_slice()), cplx(q.as_slice()));
        for r in 0..2 {
            worst = worst.max((x[r] - a * p[r] - b * q[r]).norm());
        }
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn dbar_form_has_type_01() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let theta = DbarForm::from_form(&position_form(&mut rng, 3)).unwrap();
    for _ in 0..20 {
        let x = rvec(&mut rng, 2);
        let v = rvec(&mut rng, 2);
        assert!(theta.type_defect(&x, &v).unwrap() < 1e-12);
    }
}

// ---- J̃ on the total space ----

#[test]
fn induced_structure_product_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut product = DMatrix::zeros(6, 6);
    product[(1, 0)] = 1.0;
    product[(0, 1)] = -1.0;
    product.view_mut((2, 2), (4, 4)).copy_from(&standard_complex_structure(2));
    let c = DVector::from_vec(vec![Complex64::new(0.3, -1.0), Complex64::new(2.0, 0.5)]);
    let j0 = induced_total_j(&DbarForm::zero(2), &[0.1, 0.2], &c).unwrap();
    assert_eq!(j0, product);
    let theta = DbarForm::from_form(&position_form(&mut rng, 2)).unwrap();
    let jc = induced_total_j(&theta, &[0.1, 0.2], &DVector::zeros(2)).unwrap();
    assert_eq!(jc, product);
}

#[test]
fn induced_structure_squares_to_minus_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let theta = DbarForm::from_form(&position_form(&mut rng, 3)).unwrap();
        let c = DVector::from_iterator(3, rcomplex(&mut rng, 3, 1).iter().copied());
        let x = rvec(&mut rng, 2);
        let j = induced_total_j(&theta, &x, &c).unwrap();
        let defect = (&j * &j + DMatrix::identity(8, 8)).norm();
        assert!(defect < 1e-12, "{defect}");
    }
}

// ---- ∂̄-compatible connections ----

#[test]
fn compatible_connection_splitting_is_holomorphic() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let form = position_form(&mut rng, 2);
    let theta = DbarForm::from_form(&form).unwrap();
    for _ in 0..20 {
        let x = rvec(&mut rng, 2);
        assert!(dbar_compatibility_residual(&theta, &form, &x).unwrap() < 1e-9);
        let c = DVector::from_iterator(2, rcomplex(&mut rng, 2, 1).iter().copied());
        let w = rvec(&mut rng, 2);
        let r = splitting_residual(&theta, &form, &x, &c, &w).unwrap();
        assert!(r < 1e-7, "{r}");
    }
    // Adding a (1,0) part keeps the connection compatible with θ = µ dz̄.
    let mu = rcomplex(&mut rng, 2, 2);
    let nu = rcomplex(&mut rng, 2, 2);
    let theta = DbarForm::constant(mu.clone()).unwrap();
    let conn = ConnectionForm::new(2, 2, move |_, v| Ok(&mu * Complex64::new(v[0], -v[1]) + &nu * Complex64::new(v[0], v[1])));
    let c = DVector::from_vec(vec![Complex64::new(1.0, 0.5), Complex64::new(-0.2, 0.7)]);
    assert!(dbar_compatibility_residual(&theta, &conn, &[0.0, 0.0]).unwrap() < 1e-12);
    assert!(splitting_residual(&theta, &conn, &[0.0, 0.0], &c, &[0.3, -0.8]).unwrap() < 1e-12);
}

#[test]
fn incompatible_connection_is_detected() {
    let (theta, conn) = incompatible_connection_example();
    let one = DVector::from_element(1, Complex64::new(1.0, 0.0));
    assert!(dbar_compatibility_residual(&theta, &conn, &[0.2, 0.1]).unwrap() > 1e-3);
    let r = splitting_residual(&theta, &conn, &[0.2, 0.1], &one, &[1.0, 0.0]).unwrap();
    assert!((r - 0.1).abs() < 1e-12, "{r}");
}

#[test]
fn symbol_is_injective() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let eta: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let norm = eta[0].hypot(eta[1]);
        if norm == 0.0 {
            continue;
        }
        let s = dbar_symbol(eta, 3).singular_values().min();
        assert!(s > 0.1 * norm, "{s} vs {norm}");
    }
}

// ---- Nijenhuis tensor ----

/// Fourth-order Jacobian of a vector field.
fn jacobian(f: &dyn Fn(&[f64]) -> DVector<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let m = f(x).len();
    let mut out = DMatrix::zeros(m, n);
    for i in 0..n {
        let at = |s: f64| {
            let mut y = x.to_vec();
            y[i] += s;
            f(&y)
        };
        let col = (at(-2.0 * h) - at(2.0 * h) + (at(h) - at(-h)) * 8.0) / (12.0 * h);
        out.set_column(i, &col);
    }
    out
}

fn bracket(a: &dyn Fn(&[f64]) -> DVector<f64>, b: &dyn Fn(&[f64]) -> DVector<f64>, x: &[f64], h: f64) -> DVector<f64> {
    jacobian(b, x, h) * a(x) - jacobian(a, x, h) * b(x)
}

fn nijenhuis_oracle(j: &AlmostComplex, x: &[f64], v: &[f64], w: &[f64], h: f64) -> DVector<f64> {
    let (v, w) = (DVector::from_column_slice(v), DVector::from_column_slice(w));
    let (v2, w2) = (v.clone(), w.clone());
    let x1 = move |_: &[f64]| v.clone();
    let x2 = move |_: &[f64]| w.clone();
    let jx1 = move |y: &[f64]| j.at(y).unwrap() * &v2;
    let jx2 = move |y: &[f64]| j.at(y).unwrap() * &w2;
    let jm = j.at(x).unwrap();
    (bracket(&x1, &x2, x, h) + &jm * bracket(&x1, &jx2, x, h) + &jm * bracket(&jx1, &x2, x, h)
        - bracket(&jx1, &jx2, x, h))
        * 0.25
}

#[test]
fn nijenhuis_of_integrable_structures_vanishes() {
    let j = AlmostComplex::standard(2);
    let a = nijenhuis(&j, &[0.1, 0.2, 0.3, 0.4], &[1.0, 0.0, 2.0, 0.0], &[0.0, 1.0, 0.0, -1.0]).unwrap();
    assert!(a.amax() < 1e-14);
    let s = AlmostComplex::sphere_polar();
    let a = nijenhuis(&s, &[1.0, 0.5], &[1.0, 0.3], &[-0.2, 0.7]).unwrap();
    assert!(a.amax() < 1e-8, "{}", a.amax());
}

#[test]
fn nijenhuis_matches_bracket_oracle() {
    let j = AlmostComplex::twisted_r4(0.8);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let x = rvec(&mut rng, 4);
        let (v, w) = (rvec(&mut rng, 4), rvec(&mut rng, 4));
        let a = nijenhuis(&j, &x, &v, &w).unwrap();
        assert!(a.norm() > 1e-3, "tensor too small to compare: {}", a.norm());
        for h in [2e-3, 1e-3] {
            let o = nijenhuis_oracle(&j, &x, &v, &w, h);
            let rel = (&a - &o).norm() / o.norm();
            assert!(rel < 1e-4, "h = {h}: rel {rel}");
        }
        assert!(nijenhuis(&j, &x, &v, &v).unwrap().amax() < 1e-10);
    }
}

// ---- J-linear connections ----

fn symmetric_perturbation(scale: f64) -> impl Fn(&[f64]) -> Christoffel + Send + Sync + 'static {
    move |x: &[f64]| {
        Christoffel::from_fn(4, |k, i, l| {
            let (a, b) = (i.min(l) as f64, i.max(l) as f64);
            scale * ((k as f64 + 1.0) * x[0] + a * x[1] - b * x[2] + 0.3 * x[3] * a * b).sin()
        })
    }
}

fn skew_perturbation(_: &[f64]) -> Christoffel {
    Christoffel::from_fn(4, |k, i, l| if k == 0 && i == 1 && l == 2 { 0.5 } else if k == 0 && i == 2 && l == 1 { -0.5 } else { 0.0 })
}

#[test]
fn j_linear_connection_of_constant_structure_is_unchanged() {
    let c = j_linear_connection(&ConnectionCoeffs::flat(4), &AlmostComplex::standard(2)).unwrap();
    assert!(c.at(&[0.3, -0.1, 0.2, 0.5]).unwrap().max_abs() < 1e-14);
}

#[test]
fn j_linear_connection_commutes_with_j() {
    let j = AlmostComplex::twisted_r4(0.8);
    let base = ConnectionCoeffs::flat(4).perturbed(symmetric_perturbation(0.3));
    let cj = j_linear_connection(&base, &j).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let field = |y: &[f64]| DVector::from_vec(vec![y[0].sin(), y[1] * y[2], y[3].cos(), y[0] - y[1]]);
    let j_field = |y: &[f64]| j.at(y).unwrap() * field(y);
    for _ in 0..20 {
        let x = rvec(&mut rng, 4);
        let v = DVector::from_vec(rvec(&mut rng, 4));
        let g = cj.at(&x).unwrap().contract(v.as_slice());
        let lhs = jacobian(&j_field, &x, 1e-3) * &v + &g * j_field(&x);
        let rhs = j.at(&x).unwrap() * (jacobian(&field, &x, 1e-3) * &v + &g * field(&x));
        let r = (lhs - rhs).amax();
        assert!(r < 1e-8, "{r}");
    }
}

#[test]
fn j_linear_connection_is_metric_for_orthogonal_j() {
    let j = AlmostComplex::twisted_r4(0.8);
    let cj = j_linear_connection(&ConnectionCoeffs::flat(4), &j).unwrap();
    let identity: FiberMetric<f64> = Arc::new(|_| DMatrix::identity(4, 4));
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10 {
        let x = rvec(&mut rng, 4);
        let v = rvec(&mut rng, 4);
        let r = metric_compat_residual(&cj.form(), &identity, &x, &v).unwrap().amax();
        assert!(r < 1e-8, "{r}");
    }
}

#[test]
fn kahler_torsion_equals_minus_nijenhuis() {
    let c = j_linear_connection(&ConnectionCoeffs::flat(4), &AlmostComplex::standard(2)).unwrap();
    let t = torsion(&c, &[0.1, 0.2, 0.3, 0.4], &[1.0, 2.0, 0.0, -1.0], &[0.5, 0.0, 1.0, 0.3]).unwrap();
    assert!(t.amax() < 1e-10);
    // The round sphere is Kähler: Levi-Civita is already J-linear.
    let s: Arc<dyn MetricField> = Arc::new(RoundSphere);
    let lc = ConnectionCoeffs::levi_civita(s);
    let j = AlmostComplex::sphere_polar();
    let cj = j_linear_connection(&lc, &j).unwrap();
    let x = [1.1, 0.4];
    assert!(covariant_j_residual(&j, &lc, &x).unwrap() < 1e-8);
    let d = cj.at(&x).unwrap().max_abs_diff(&lc.at(&x).unwrap());
    assert!(d < 1e-8, "{d}");
}

trait MaxAbsDiff {
    fn max_abs_diff(&self, other: &Self) -> f64;
}

impl MaxAbsDiff for Christoffel {
    fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.dim();
        let mut d: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for l in 0..n {
                    d = d.max((self.get(k, i, l) - other.get(k, i, l)).abs());
                }
            }
        }
        d
    }
}

// ---- D_{J;Σ} ----

#[test]
fn djs_of_holomorphic_field_on_plane_vanishes() {
    let patch = HolomorphicPatch::coordinate_plane(2, [0.0, 0.0], 1.0, CircleGrid::new(32).unwrap()).unwrap();
    let xi = |z: &[f64]| DVector::from_vec(vec![z[0] * z[0] - z[1] * z[1], 2.0 * z[0] * z[1]]);
    let d = d_js_operator(&AlmostComplex::standard(1), &ConnectionCoeffs::flat(2), &patch, &xi).unwrap();
    assert!(d.max_abs() < 1e-8, "{}", d.max_abs());
}

fn plane_patch() -> HolomorphicPatch {
    HolomorphicPatch::coordinate_plane(4, [0.3, -0.2], 0.5, CircleGrid::new(32).unwrap()).unwrap()
}

#[test]
fn djs_is_independent_of_torsion_free_connection() {
    let j = AlmostComplex::twisted_r4(0.8);
    let patch = plane_patch();
    let xi = |z: &[f64]| DVector::from_vec(vec![z[0].sin(), z[1].cos(), z[0] * z[1], z[0] * z[0] - z[1]]);
    let flat = ConnectionCoeffs::flat(4);
    let bent = flat.perturbed(symmetric_perturbation(0.4));
    let a = d_js_operator(&j, &flat, &patch, &xi).unwrap();
    let b = d_js_operator(&j, &bent, &patch, &xi).unwrap();
    let d = a.sub(&b).unwrap().max_abs();
    assert!(d < 1e-7, "{d}");
    assert!(a.max_abs() > 0.1);
    assert!(a.type01_defect(|k| j.at(&patch.point(&patch.node_param(k)))).unwrap() < 1e-8);
}

#[test]
fn djs_preserves_tangency() {
    let j = AlmostComplex::twisted_r4(0.8);
    let patch = plane_patch();
    let xi = |z: &[f64]| DVector::from_vec(vec![z[0].sin() + z[1] * z[1], z[0] * z[1], 0.0, 0.0]);
    let bent = ConnectionCoeffs::flat(4).perturbed(symmetric_perturbation(0.4));
    let d = d_js_operator(&j, &bent, &patch, &xi).unwrap();
    for k in 0..patch.grid().node_count() {
        let (a, b) = d.at(k);
        assert!(a[2].abs().max(a[3].abs()).max(b[2].abs()).max(b[3].abs()) < 1e-6);
    }
}

#[test]
fn djs_rejects_torsion_and_non_holomorphic_patches() {
    let j = AlmostComplex::twisted_r4(0.8);
    let xi = |z: &[f64]| DVector::from_vec(vec![z[0], z[1], 0.0, 0.0]);
    let twisted = ConnectionCoeffs::flat(4).perturbed(skew_perturbation);
    assert!(matches!(d_js_operator(&j, &twisted, &plane_patch(), &xi), Err(GeomError::InvalidConnection(_))));
    let bad = HolomorphicPatch::new(4, |z| vec![z[0], 0.0, z[1], 0.0], [0.0, 0.0], 0.5, CircleGrid::new(16).unwrap())
        .unwrap();
    assert!(matches!(
        d_js_operator(&j, &ConnectionCoeffs::flat(4), &bad, &xi),
        Err(GeomError::InvalidArgument(_))
    ));
}

fn polynomial_field(rng: &mut ChaCha8Rng) -> impl Fn(&[f64]) -> DVector<f64> {
    let a = rvec(rng, 4);
    let b = rvec(rng, 16);
    let c = rvec(rng, 64);
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

#[test]
fn bracket_form_flat_holomorphic() {
    let zeta = |_: &[f64]| DVector::from_vec(vec![1.0, 0.0]);
    let xi = |y: &[f64]| DVector::from_vec(vec![y[0] * y[0] - y[1] * y[1], 2.0 * y[0] * y[1]]);
    let b = d_js_bracket_form(&AlmostComplex::standard(1), &zeta, &xi, &[0.4, -0.3]).unwrap();
    assert!(b.amax() < 1e-8);
}

#[test]
fn bracket_form_matches_operator() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let patch = plane_patch();
    for j in [AlmostComplex::standard(2), AlmostComplex::twisted_r4(0.8)] {
        let field = polynomial_field(&mut rng);
        let along = |z: &[f64]| field(&patch.point(z));
        let d = d_js_operator(&j, &ConnectionCoeffs::flat(4), &patch, &along).unwrap();
        let scale = d.max_abs();
        for k in 0..patch.grid().node_count() {
            let x = patch.point(&patch.node_param(k));
            let e1 = |_: &[f64]| DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
            let b = d_js_bracket_form(&j, &e1, &field, &x).unwrap();
            let (a, _) = d.at(k);
            let rel = (a - b).amax() / scale;
            assert!(rel < 1e-5, "{rel}");
        }
    }
}

#[test]
fn four_bracket_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let j = AlmostComplex::twisted_r4(0.8);
    for conn in [ConnectionCoeffs::flat(4), ConnectionCoeffs::flat(4).perturbed(symmetric_perturbation(0.3))] {
        for _ in 0..5 {
            let field = polynomial_field(&mut rng);
            let x = rvec(&mut rng, 4);
            let big_x = DVector::from_vec(rvec(&mut rng, 4));
            let bx = big_x.clone();
            let zeta = move |_: &[f64]| bx.clone();
            let four = d_js_four_bracket(&j, &zeta, &field, &x).unwrap();
            let corrected = dbar_jlinear_corrected(&j, &conn, &field, &x, big_x.as_slice()).unwrap();
            let rel = (&four - &corrected).amax() / four.amax().max(1e-3);
            assert!(rel < 1e-5, "{rel}: {four} vs {corrected}");
        }
    }
}

// ---- generalized CR operators ----

#[test]
fn cr_pullback_trivial_holomorphic() {
    let u = Arc::new(MapU::sample(rect(41), 2, |z| vec![z[0], z[1]]).unwrap());
    let xi = SectionAlongU::sample(u, 2, |z, _| vec![z[0] * z[0] - z[1] * z[1], 2.0 * z[0] * z[1]]);
    let op = CrOperator::trivial(&AlmostComplex::standard(1), 1).unwrap();
    let d = cr_pullback(&op, &xi).unwrap();
    assert!(d.max_abs() < 1e-10);
}

#[test]
fn cr_pullback_reduces_to_bundle_dbar() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (m1, m2, m3) = (rcomplex(&mut rng, 2, 2), rcomplex(&mut rng, 2, 2), rcomplex(&mut rng, 2, 2));
    let big_theta = ConnectionForm::new(2, 2, move |x: &[f64], w: &[f64]| {
        Ok(&m1 * Complex64::from(w[0]) + &m2 * Complex64::from(w[1]) + &m3 * Complex64::from(x[0] * w[1] - x[1] * w[0]))
    });
    let uf = |z: &[f64; 2]| vec![z[0].sin() + 0.5 * z[1].cos(), z[0].cos() * z[1].sin()];
    let ux = |z: &[f64; 2]| vec![z[0].cos(), -z[0].sin() * z[1].sin()];
    let uy = |z: &[f64; 2]| vec![-0.5 * z[1].sin(), z[0].cos() * z[1].cos()];
    let u = Arc::new(MapU::with_derivatives(torus(48), 2, uf, ux, uy).unwrap());
    let xi = SectionAlongU::sample(u.clone(), 4, |z, _| {
        vec![z[0].cos(), (z[1] + z[0]).sin(), 0.3 * (2.0 * z[1]).cos(), z[0].sin() * z[1].cos()]
    });
    let op = CrOperator::complex(&AlmostComplex::standard(1), &big_theta).unwrap();
    let d = cr_pullback(&op, &xi).unwrap();

    let bt = big_theta.clone();
    let pulled = ConnectionForm::new(2, 2, move |z: &[f64], v: &[f64]| {
        let z = [z[0], z[1]];
        let (p, a, b) = (uf(&z), ux(&z), uy(&z));
        let w = [a[0] * v[0] + b[0] * v[1], a[1] * v[0] + b[1] * v[1]];
        bt.at(&p, &w)
    });
    let reference = bundle_dbar(&DbarForm::from_form(&pulled).unwrap(), xi.values()).unwrap();
    let diff = d.sub(&reference).unwrap().max_abs();
    assert!(diff < 1e-9, "{diff}");
    assert!(d.max_abs() > 0.1);
}

#[test]
fn cr_pullback_nijenhuis_term() {
    let u = Arc::new(
        MapU::sample(torus(32), 4, |z| vec![z[0].sin(), z[1].cos(), 0.5 * (z[0] - z[1]).sin(), 0.2 * z[0].cos()]).unwrap(),
    );
    let xi = SectionAlongU::sample(u.clone(), 4, |z, _| vec![z[1].sin(), 0.5, z[0].cos(), (z[0] + z[1]).sin()]);
    let flat = ConnectionCoeffs::flat(4);
    let std = AlmostComplex::standard(2);
    let plain = cr_pullback(&CrOperator::tangent(&std, &flat).unwrap(), &xi).unwrap();
    let with_a = cr_pullback(&CrOperator::tangent(&std, &flat).unwrap().with_nijenhuis().unwrap(), &xi).unwrap();
    assert!(plain.sub(&with_a).unwrap().max_abs() < 1e-12);

    let j = AlmostComplex::twisted_r4(0.8);
    let cj = j_linear_connection(&flat, &j).unwrap();
    let d = cr_pullback(&CrOperator::tangent(&j, &cj).unwrap().with_nijenhuis().unwrap(), &xi).unwrap();
    let defect = d.type01_defect(|k| j.at(u.point(k))).unwrap();
    assert!(defect < 1e-6, "{defect}");
}

// ---- nonlinear expansion ----

fn sphere_map(n: usize) -> Arc<MapU> {
    Arc::new(
        MapU::sample(torus(n), 2, |z| vec![PI / 2.0 + 0.4 * z[0].sin() * z[1].cos(), 0.5 * z[1].sin() + 0.3 * z[0].cos()])
            .unwrap(),
    )
}

fn sphere_section(u: Arc<MapU>) -> SectionAlongU {
    SectionAlongU::sample(u, 2, |z, _| vec![(z[0] + z[1]).cos(), 0.8 * z[0].sin() + 0.4 * (2.0 * z[1]).cos()])
}

#[test]
fn remainder_vanishes_exactly_at_zero_section() {
    let u = sphere_map(32);
    let xi = SectionAlongU::zeros(u, 2);
    let s: Arc<dyn MetricField> = Arc::new(RoundSphere);
    let exp = ExpLikeMap::riemannian(s.clone());
    let out = nonlinear_dbar(&xi, &exp, &AlmostComplex::sphere_polar(), &ConnectionCoeffs::levi_civita(s)).unwrap();
    assert_eq!(out.remainder.max_abs(), 0.0);
    assert!(out.dbar_u.max_abs() > 0.1);
}

#[test]
fn remainder_vanishes_for_flat_translation() {
    let u = Arc::new(
        MapU::sample(torus(32), 4, |z| vec![z[0].sin(), z[1].cos(), 0.5 * (z[0] + z[1]).sin(), 0.2]).unwrap(),
    );
    let xi = SectionAlongU::sample(u, 4, |z, _| vec![0.3 * z[1].sin(), 0.2 * z[0].cos(), 0.1, 0.3 * (z[0] - z[1]).cos()]);
    let flat = ConnectionCoeffs::flat(4);
    let exp = ExpLikeMap::new(flat.clone(), ChartBox::cube(4, 10.0)).unwrap();
    let out = nonlinear_dbar(&xi, &exp, &AlmostComplex::standard(2), &flat).unwrap();
    assert!(out.remainder.max_abs() < 1e-9, "{}", out.remainder.max_abs());
    assert!(out.linear.max_abs() > 0.05);
}

#[test]
fn remainder_is_quadratic_on_sphere() {
    let u = sphere_map(128);
    let xi0 = sphere_section(u);
    let s: Arc<dyn MetricField> = Arc::new(RoundSphere);
    let exp = ExpLikeMap::riemannian(s.clone());
    let lc = ConnectionCoeffs::levi_civita(s);
    let j = AlmostComplex::sphere_polar();
    let ts = [0.2, 0.1, 0.05];
    let norms: Vec<f64> = ts
        .iter()
        .map(|t| nonlinear_dbar(&xi0.scaled(*t), &exp, &j, &lc).unwrap().remainder.lp_norm(4.0))
        .collect();
    let k = slope(&ts, &norms);
    assert!((1.9..=2.1).contains(&k), "slope {k}, norms {norms:?}");
}

#[test]
fn nonlinear_dbar_preconditions() {
    let u = sphere_map(16);
    let s: Arc<dyn MetricField> = Arc::new(RoundSphere);
    let exp = ExpLikeMap::riemannian(s.clone());
    let lc = ConnectionCoeffs::levi_civita(s);
    let big = sphere_section(u).scaled(5.0);
    assert!(matches!(
        nonlinear_dbar(&big, &exp, &AlmostComplex::sphere_polar(), &lc),
        Err(GeomError::Precondition(_))
    ));

    let u4 = Arc::new(MapU::sample(torus(16), 4, |z| vec![z[0].sin(), z[1].cos(), 0.5, 0.2]).unwrap());
    let xi = SectionAlongU::zeros(u4, 4);
    let flat = ConnectionCoeffs::flat(4);
    let exp4 = ExpLikeMap::new(flat.clone(), ChartBox::cube(4, 10.0)).unwrap();
    assert!(matches!(
        nonlinear_dbar(&xi, &exp4, &AlmostComplex::twisted_r4(0.8), &flat),
        Err(GeomError::Precondition(_))
    ));
}

// ---- admissible norms ----

fn admissibility_probes(seed: u64, u: &Arc<MapU>) -> Vec<AdmissibilityProbe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = u.grid().clone();
    (0..8)
        .map(|_| {
            let c = rvec(&mut rng, 12);
            let trig = |k: usize, z: &[f64; 2]| c[k] * (z[0] + c[k + 1]).sin() + c[k + 2] * (2.0 * z[1] - c[k + 3]).cos();
            let multiplier = GridFunction::sample(grid.clone(), 1, |n, out| out[0] = trig(0, &n.cart));
            let dx = GridFunction::sample(grid.clone(), 2, |n, out| {
                out[0] = trig(4, &n.cart);
                out[1] = trig(8, &n.cart);
            });
            let dy = GridFunction::sample(grid.clone(), 2, |n, out| {
                out[0] = trig(2, &n.cart);
                out[1] = trig(6, &n.cart);
            });
            let section = SectionAlongU::sample(u.clone(), 2, |z, _| vec![trig(1, z), trig(5, z)]);
            AdmissibilityProbe { multiplier, form: OneForm::new(dx, dy).unwrap(), section }
        })
        .collect()
}

#[test]
fn standard_norms_are_admissible() {
    let u = Arc::new(MapU::sample(torus(64), 2, |_| vec![0.0, 0.0]).unwrap());
    let norms = SectionNorms::new(4.0, ConnectionForm::zero(2, 2)).unwrap();
    let report = admissibility_check(&norms, &admissibility_probes(14, &u)).unwrap();
    assert!(report.pass(), "{report:?}");
    assert!(report.c0_constant.is_finite() && report.c0_constant > 0.0);
    assert!(report.rotation_defect <= 1e-12);

    let mut one = admissibility_probes(15, &u).remove(0);
    one.multiplier = GridFunction::sample(u.grid().clone(), 1, |_, out| out[0] = 1.0);
    let r = admissibility_check(&norms, &[one]).unwrap();
    assert!((r.multiplier_ratio - 1.0).abs() < 1e-12);
}

// ---- properties ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn nijenhuis_antisymmetric_and_antilinear(
        x in prop::array::uniform4(-1.0f64..1.0),
        v in prop::array::uniform4(-1.0f64..1.0),
        w in prop::array::uniform4(-1.0f64..1.0),
    ) {
        let j = AlmostComplex::twisted_r4(0.8);
        let a = nijenhuis(&j, &x, &v, &w).unwrap();
        let b = nijenhuis(&j, &x, &w, &v).unwrap();
        prop_assert!((&a + &b).amax() < 1e-6);
        let jv = j.at(&x).unwrap() * DVector::from_column_slice(&v);
        let c = nijenhuis(&j, &x, jv.as_slice(), &w).unwrap();
        prop_assert!((c + j.at(&x).unwrap() * &a).amax() < 1e-6);
    }

    #[test]
    fn induced_structure_is_complex(
        re in prop::collection::vec(-2.0f64..2.0, 8),
        im in prop::collection::vec(-2.0f64..2.0, 8),
        c in prop::array::uniform4(-2.0f64..2.0),
    ) {
        let a = DMatrix::from_fn(2, 2, |r, s| Complex64::new(re[2 * r + s], im[2 * r + s]));
        let b = DMatrix::from_fn(2, 2, |r, s| Complex64::new(re[4 + 2 * r + s], im[4 + 2 * r + s]));
        let form = ConnectionForm::new(2, 2, move |_, v| Ok(&a * Complex64::from(v[0]) + &b * Complex64::from(v[1])));
        let theta = DbarForm::from_form(&form).unwrap();
        let cv = DVector::from_vec(vec![Complex64::new(c[0], c[1]), Complex64::new(c[2], c[3])]);
        let j = induced_total_j(&theta, &[0.0, 0.0], &cv).unwrap();
        prop_assert!((&j * &j + DMatrix::identity(6, 6)).amax() < 1e-12);
        let fiber = j.view((2, 2), (4, 4)).into_owned();
        prop_assert_eq!(fiber, realify(&(DMatrix::<Complex64>::identity(2, 2) * Complex64::i())));
    }

    #[test]
    fn dbar_map_has_type_01(c in prop::collection::vec(-1.0f64..1.0, 8)) {
        let j = AlmostComplex::twisted_r4(0.5);
        let u = MapU::sample(torus(16), 4, |z| {
            (0..4).map(|k| c[2 * k] * (z[0] + k as f64).sin() + c[2 * k + 1] * (z[1] - k as f64).cos()).collect()
        }).unwrap();
        let d = dbar_map(&u, &j).unwrap();
        prop_assert!(d.type01_defect(|k| j.at(u.point(k))).unwrap() < 1e-10);
    }
}
