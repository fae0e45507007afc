//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use geomest::checks::{check, latitude_loop, rotation_angle};
use geomest::report::RecordEntry;
use geomest::runner::{calibrate_checks, run_checks};
use geomest::{manifest, ConstantsFile, Report, Suite, SuiteConfig};
use geomest_core::complexlin::{nonlinear_dbar, AlmostComplex, MapU, SectionAlongU};
use geomest_core::grids::{CircleGrid, Grid, GridFunction, TorusGrid};
use geomest_core::riemann::{
    christoffel, torsion, Christoffel, ConnectionCoeffs, HyperbolicHalfPlane, MetricField, RoundSphere,
    StereographicSphere,
};
use geomest_core::sobolev::{c0_recursion_exponents, fourier_poincare};
use geomest_core::transport::{transport_matrix, ExpLikeMap, PathCurve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn cfg(samples: usize) -> SuiteConfig {
    SuiteConfig { sample_count: samples, ..SuiteConfig::default() }
}

fn run_ids(ids: &[&str], samples: usize) -> Result<(Report, Duration), String> {
    let checks: Vec<_> = ids.iter().map(|id| check(id).ok_or(format!("unknown check {id}"))).collect::<Result<_, _>>()?;
    let t = Instant::now();
    let report = run_checks(&checks, &cfg(samples), None).map_err(|e| e.to_string())?;
    Ok((report, t.elapsed()))
}

fn failures(records: &[&RecordEntry]) -> usize {
    records.iter().filter(|r| !r.pass).count()
}

fn by_lemma<'a>(report: &'a Report, lemma: &str) -> Vec<&'a RecordEntry> {
    report.records.iter().filter(|r| r.lemma_id == lemma).collect()
}

fn by_check<'a>(report: &'a Report, check: &str) -> Vec<&'a RecordEntry> {
    report.records.iter().filter(|r| r.check == check).collect()
}

fn param(r: &RecordEntry, k: &str) -> f64 {
    r.params.get(k).copied().unwrap_or(f64::NAN)
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

fn oracle_sphere(x: &[f64]) -> [[[f64; 2]; 2]; 2] {
    let (s, c) = x[0].sin_cos();
    [[[0.0, 0.0], [0.0, -s * c]], [[0.0, c / s], [c / s, 0.0]]]
}

fn oracle_half_plane(x: &[f64]) -> [[[f64; 2]; 2]; 2] {
    let y = x[1];
    [[[0.0, -1.0 / y], [-1.0 / y, 0.0]], [[1.0 / y, 0.0], [0.0, -1.0 / y]]]
}

fn rel_error(c: &Christoffel, o: &[[[f64; 2]; 2]; 2]) -> f64 {
    let (mut diff, mut scale): (f64, f64) = (0.0, 0.0);
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                diff = diff.max((c.get(k, i, j) - o[k][i][j]).abs());
                scale = scale.max(o[k][i][j].abs());
            }
        }
    }
    diff / scale
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = Instant::now();
    let (mut chris, mut tors): (f64, f64) = (0.0, 0.0);
    let metrics: [Arc<dyn MetricField>; 2] = [Arc::new(RoundSphere), Arc::new(HyperbolicHalfPlane)];
    for _ in 0..100 {
        let xs = [
            vec![rng.random_range(0.2..PI - 0.2), rng.random_range(-PI..PI)],
            vec![rng.random_range(-2.0..2.0), rng.random_range(0.3..3.0)],
        ];
        for (m, x) in xs.iter().enumerate() {
            let g = metrics[m].clone();
            let oracle = if m == 0 { oracle_sphere(x) } else { oracle_half_plane(x) };
            chris = chris.max(rel_error(&christoffel(g.as_ref(), x).map_err(|e| e.to_string())?, &oracle));
            let v: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let w: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let tv = torsion(&ConnectionCoeffs::levi_civita(g), x, &v, &w).map_err(|e| e.to_string())?;
            tors = tors.max(tv.norm());
        }
    }
    let (report, _) = run_ids(&["riemann.christoffel", "riemann.torsion", "riemann.metric_compat"], 100)?;
    let elapsed = t.elapsed();
    let compat = by_lemma(&report, "metriccomp_e");
    let worst_compat = compat.iter().map(|r| r.lhs).fold(0.0, f64::max);
    ensure(chris < 1e-6, format!("Christoffel relative error {chris:e}"))?;
    ensure(tors < 1e-10, format!("torsion {tors:e}"))?;
    ensure(compat.len() >= 100 && worst_compat < 1e-8, format!("metric compatibility {worst_compat:e} on {}", compat.len()))?;
    ensure(report.summary.failed == 0, format!("{} failed riemann records", report.summary.failed))?;
    ensure(elapsed < Duration::from_secs(5), format!("took {elapsed:?}"))?;
    Ok(format!(
        "Christoffel rel {chris:.1e}, torsion {tors:.1e}, compat {worst_compat:.1e}, {} records in {:.2}s",
        report.summary.total,
        elapsed.as_secs_f64()
    ))
}

/// Area of the stereographic image of the disk |z − c| ≤ r: a spherical
/// cap whose angular radius comes from the images of the two points of the
/// circle on the line through 0 and c.
fn stereographic_cap_area(c: [f64; 2], r: f64) -> f64 {
    let d = c[0].hypot(c[1]);
    let alpha = (d + r).atan() - (d - r).atan();
    2.0 * PI * (1.0 - alpha.cos())
}

fn criterion_2() -> Verdict {
    let t = Instant::now();
    let sphere: Arc<dyn MetricField> = Arc::new(RoundSphere);
    let theta = ConnectionCoeffs::levi_civita(sphere.clone()).form();
    let mut worst_lat: f64 = 0.0;
    for t0 in [PI / 6.0, PI / 3.0, PI / 2.0] {
        let path = latitude_loop(t0, 256).map_err(|e| e.to_string())?;
        let pi = transport_matrix(&theta, &path).map_err(|e| e.to_string())?;
        let angle = rotation_angle(&pi, &sphere.eval(&[t0, 0.0]));
        // Vectors turn clockwise in the (∂θ, ∂φ) frame by 2π cos θ₀.
        worst_lat = worst_lat.max(wrap(angle + 2.0 * PI * t0.cos()).abs());
    }
    let stereo: Arc<dyn MetricField> = Arc::new(StereographicSphere);
    let theta = ConnectionCoeffs::levi_civita(stereo.clone()).form();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_gb: f64 = 0.0;
    for _ in 0..10 {
        let c = [rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8)];
        let r = rng.random_range(0.1..1.2);
        let path = PathCurve::new(
            0.0,
            2.0 * PI,
            move |t| vec![c[0] + r * t.cos(), c[1] + r * t.sin()],
            move |t| vec![-r * t.sin(), r * t.cos()],
            256,
        )
        .map_err(|e| e.to_string())?;
        let pi = transport_matrix(&theta, &path).map_err(|e| e.to_string())?;
        let angle = rotation_angle(&pi, &stereo.eval(&[c[0] + r, c[1]]));
        worst_gb = worst_gb.max(wrap(angle - stereographic_cap_area(c, r)).abs());
    }
    let elapsed = t.elapsed();
    ensure(worst_lat < 1e-4, format!("latitude rotation error {worst_lat:e}"))?;
    ensure(worst_gb < 1e-4, format!("Gauss-Bonnet error {worst_gb:e}"))?;
    ensure(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!("latitude error {worst_lat:.1e}, Gauss-Bonnet error {worst_gb:.1e} on 10 loops, {:.2}s", elapsed.as_secs_f64()))
}

fn criterion_3(shared: &Shared) -> Verdict {
    let recs = by_check(&shared.report, "transport.rectangle");
    ensure(recs.len() == 100, format!("{} rectangle records", recs.len()))?;
    ensure(failures(&recs) == 0, format!("{} violations", failures(&recs)))?;
    let base = shared.constants.constants.get("ptrec_lmm").and_then(|e| e.value).ok_or("no C_K")?;
    let mut doubled = SuiteConfig::default();
    doubled.grids.transport_steps *= 2;
    let refit = calibrate_checks(&[check("transport.rectangle").unwrap()], &doubled).map_err(|e| e.to_string())?;
    let c2 = refit.constants["ptrec_lmm"].value.ok_or("no refit C_K")?;
    let drift = (c2 / base - 1.0).abs();
    ensure(drift <= 0.1, format!("C_K {base} -> {c2} under doubled steps"))?;
    Ok(format!("100 rectangles, 0 violations, C_K = {base:.4}, doubled-step drift {drift:.1e}"))
}

fn harmonic_coefficients(rng: &mut ChaCha8Rng) -> Vec<(f64, f64, f64)> {
    rand::seq::index::sample(rng, 20, 6)
        .into_iter()
        .map(|k| ((k + 1) as f64, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn criterion_4() -> Verdict {
    let t = Instant::now();
    let (report, _) = run_ids(&["sobolev.fourier_poincare"], 100)?;
    let elapsed = t.elapsed();
    let draws: Vec<_> = report.records.iter().filter(|r| r.params.contains_key("draw")).collect();
    let harmonics: Vec<_> = report.records.iter().filter(|r| r.params.contains_key("harmonic")).collect();
    ensure(draws.len() == 1000, format!("{} polynomial records", draws.len()))?;
    ensure(
        draws.iter().all(|r| r.constant_used == 1.0 && r.constant_provenance == "paper"),
        "constant is not the explicit 1",
    )?;
    ensure(failures(&draws) == 0, format!("{} violations", failures(&draws)))?;
    let sat = harmonics.iter().map(|r| r.lhs).fold(0.0, f64::max);
    ensure(failures(&harmonics) == 0 && sat <= 1e-10, format!("first harmonic saturation {sat:e}"))?;

    // ∫ζ² = π Σ(a² + b²) and ∫ζ′² = π Σ k²(a² + b²) for ζ = Σ a cos kt + b sin kt.
    let grid: Arc<Grid> = Arc::new(CircleGrid::new(256).map_err(|e| e.to_string())?.into());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let co = harmonic_coefficients(&mut rng);
        let f = GridFunction::sample(grid.clone(), 1, |n, v| {
            v[0] = co.iter().map(|(k, a, b)| a * (k * n.native[0]).cos() + b * (k * n.native[0]).sin()).sum()
        });
        let rec = fourier_poincare(&f).map_err(|e| e.to_string())?;
        let lhs: f64 = PI * co.iter().map(|(_, a, b)| a * a + b * b).sum::<f64>();
        let rhs: f64 = PI * co.iter().map(|(k, a, b)| k * k * (a * a + b * b)).sum::<f64>();
        worst = worst.max((rec.lhs / lhs - 1.0).abs()).max((rec.rhs / rhs - 1.0).abs());
    }
    ensure(worst < 1e-10, format!("Parseval oracle mismatch {worst:e}"))?;
    ensure(elapsed < Duration::from_secs(5), format!("took {elapsed:?}"))?;
    Ok(format!("1000 polynomials, 0 violations, saturation {sat:.1e}, oracle {worst:.1e}, {:.2}s", elapsed.as_secs_f64()))
}

fn criterion_5(shared: &Shared) -> Verdict {
    let report = &shared.report;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
    let pq = by_lemma(report, "pqplane_crl");
    ensure(pq.len() == 900, format!("{} pq records", pq.len()))?;
    for r in &pq {
        let (p, q) = (param(r, "p"), param(r, "q"));
        let expect = q.max(2.0) * PI.powf(0.5 * (1.0 - 2.0 / p + 2.0 / q));
        ensure(close(r.constant_used, expect), format!("C_{{{p},{q}}} = {} expected {expect}", r.constant_used))?;
    }
    let loj = by_lemma(report, "loj_lmm");
    ensure(loj.len() == 300 && loj.iter().all(|r| r.constant_used == 1.0), "loj records or constant")?;
    let log = by_lemma(report, "ellannbd_crl0");
    let uni = by_lemma(report, "ellannbd_crl");
    ensure(log.len() == 300 && uni.len() == 300, format!("{} log and {} uniform annulus records", log.len(), uni.len()))?;
    for r in &log {
        let expect = (PI / 2.0).sqrt() * (1.0 + (param(r, "R") / param(r, "r")).ln().sqrt());
        ensure(close(r.constant_used, expect), format!("log constant {} expected {expect}", r.constant_used))?;
    }
    let u = 125.0 * (2.0 * PI).sqrt() / 4.0;
    ensure(uni.iter().all(|r| close(r.constant_used, u)), "uniform constant")?;
    let mut radii: Vec<f64> = log.iter().map(|r| param(r, "r")).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    ensure(radii == vec![0.01, 0.1, 0.5], format!("inner radii {radii:?}"))?;
    let all: Vec<&RecordEntry> = pq.iter().chain(&loj).chain(&log).chain(&uni).copied().collect();
    ensure(all.iter().all(|r| r.constant_provenance == "paper"), "non-paper provenance")?;
    ensure(failures(&all) == 0, format!("{} violations", failures(&all)))?;
    let worst = all.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(format!("{} records, 0 violations at slack 0, worst ratio {worst:.3}", all.len()))
}

/// ‖N(tξ₀)‖₄ for a fixed smooth ξ₀ on a 128² torus.
fn nonlinear_slope_128() -> Result<f64, String> {
    let grid: Arc<Grid> = Arc::new(TorusGrid::new(2.0 * PI, 2.0 * PI, 128, 128).map_err(|e| e.to_string())?.into());
    let u = Arc::new(
        MapU::sample(grid, 2, |z| vec![PI / 2.0 + 0.4 * z[0].sin() * z[1].cos(), 0.5 * z[1].sin() + 0.3 * z[0].cos()])
            .map_err(|e| e.to_string())?,
    );
    let s: Arc<dyn MetricField> = Arc::new(RoundSphere);
    let exp = ExpLikeMap::riemannian(s.clone());
    let lc = ConnectionCoeffs::levi_civita(s);
    let xi = SectionAlongU::sample(u, 2, |z, _| vec![0.5 * (z[0] + z[1]).sin(), 0.4 * (2.0 * z[1]).cos()]);
    let ts = [0.2f64, 0.1, 0.05];
    let mut ys = Vec::new();
    for t in ts {
        let n = nonlinear_dbar(&xi.scaled(t), &exp, &AlmostComplex::sphere_polar(), &lc).map_err(|e| e.to_string())?;
        ys.push(n.remainder.lp_norm(4.0));
    }
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / 3.0, ly.iter().sum::<f64>() / 3.0);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(num / den)
}

fn criterion_6(shared: &Shared) -> Verdict {
    let nl = by_check(&shared.report, "complexlin.nonlinear");
    let case = |c: f64| -> Vec<&RecordEntry> { nl.iter().copied().filter(|r| param(r, "case") == c).collect() };
    let (zero, slope, flat) = (case(0.0), case(1.0), case(2.0));
    ensure(zero.len() == 100 && zero.iter().all(|r| r.lhs == 0.0), "N(0) is not exactly 0")?;
    let slopes: Vec<f64> = slope.iter().map(|r| param(r, "slope")).collect();
    let phi: Vec<f64> =
        by_check(&shared.report, "transport.phi_expansion").iter().filter_map(|r| r.params.get("slope").copied()).collect();
    let in_band = |s: &f64| (1.9..=2.1).contains(s);
    ensure(slopes.len() == 100 && slopes.iter().all(in_band), "N_exp slope outside [1.9, 2.1]")?;
    ensure(phi.len() == 100 && phi.iter().all(in_band), "Φ̃ slope outside [1.9, 2.1]")?;
    let worst_flat = flat.iter().map(|r| r.lhs).fold(0.0, f64::max);
    ensure(flat.len() == 100 && worst_flat <= 1e-10, format!("flat-target N {worst_flat:e}"))?;
    let fine = nonlinear_slope_128()?;
    ensure(in_band(&fine), format!("128² slope {fine}"))?;
    let range = |v: &[f64]| (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(0.0, f64::max));
    let (a, b) = range(&slopes);
    let (c, d) = range(&phi);
    Ok(format!("N slopes [{a:.3}, {b:.3}], 128² slope {fine:.3}, Φ̃ slopes [{c:.3}, {d:.3}], flat N {worst_flat:.1e}"))
}

fn criterion_7(shared: &Shared) -> Verdict {
    let ind = by_lemma(&shared.report, "DJSi_e");
    let tan = by_lemma(&shared.report, "DJSIrestr_e");
    let wi = ind.iter().map(|r| r.lhs).fold(0.0, f64::max);
    let wt = tan.iter().map(|r| r.lhs).fold(0.0, f64::max);
    ensure(ind.len() >= 50 && wi <= 1e-7, format!("independence {wi:e} on {} sections", ind.len()))?;
    ensure(tan.len() >= 50 && wt < 1e-6, format!("tangency {wt:e}"))?;
    Ok(format!("{} sections, independence {wi:.1e}, tangency {wt:.1e}", ind.len()))
}

fn criterion_8(shared: &Shared) -> Verdict {
    let j = by_lemma(&shared.report, "complexstr_lmm1");
    let wj = j.iter().map(|r| r.lhs).fold(0.0, f64::max);
    ensure(j.len() >= 1000 && wj < 1e-12, format!("‖J̃² + I‖ = {wj:e} on {} triples", j.len()))?;
    let conn = by_lemma(&shared.report, "dbarconn_lmm");
    let good: Vec<_> = conn.iter().filter(|r| param(r, "compatible") == 1.0).collect();
    let bad: Vec<_> = conn.iter().filter(|r| param(r, "compatible") == 0.0).collect();
    let wc = good.iter().map(|r| r.lhs).fold(0.0, f64::max);
    // The incompatible record reads 1e-3 ≤ residual, so its rhs is the residual.
    let wb = bad.iter().map(|r| r.rhs).fold(f64::INFINITY, f64::min);
    ensure(!good.is_empty() && wc < 1e-7, format!("compatible residual {wc:e}"))?;
    ensure(!bad.is_empty() && wb > 1e-3, format!("incompatible residual {wb:e}"))?;
    Ok(format!("{} triples ‖J̃² + I‖ ≤ {wj:.1e}, compatible {wc:.1e}, incompatible ≥ {wb:.2e}", j.len()))
}

fn criterion_9(shared: &Shared) -> Verdict {
    let elliptic: Vec<_> = shared.report.records.iter().filter(|r| r.check.starts_with("elliptic.")).collect();
    for id in ["elliptic.interior_lp1", "elliptic.interior_gradient", "elliptic.cr_interior", "elliptic.global"] {
        let recs: Vec<_> = elliptic.iter().copied().filter(|r| r.check == id && r.constant_provenance == "fitted").collect();
        ensure(recs.len() == 100, format!("{id}: {} fitted records", recs.len()))?;
        ensure(failures(&recs) == 0, format!("{id}: {} violations", failures(&recs)))?;
    }
    let shift: Vec<_> = elliptic.iter().copied().filter(|r| r.params.contains_key("shift_abs")).collect();
    let ws = shift.iter().map(|r| r.lhs).fold(0.0, f64::max);
    ensure(shift.len() == 100 && ws <= 1e-9, format!("c-shift drift {ws:e}"))?;

    let doubled = SuiteConfig { grids: SuiteConfig::default().grids.doubled(), ..SuiteConfig::default() };
    let refit = calibrate_checks(&manifest(Suite::Elliptic), &doubled).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (name, e) in &refit.constants {
        let base = shared.constants.constants.get(name).ok_or(format!("{name} missing from the constants file"))?;
        let pairs: Vec<(f64, f64)> = match (&base.value, &e.value, &base.buckets, &e.buckets) {
            (Some(a), Some(b), _, _) => vec![(*a, *b)],
            (_, _, Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| (x.value, y.value)).collect(),
            _ => return Err(format!("{name}: mismatched constant shapes")),
        };
        for (a, b) in pairs {
            worst = worst.max((b / a - 1.0).abs());
        }
    }
    ensure(worst <= 0.1, format!("grid-doubling drift {worst:.3}"))?;
    Ok(format!("400 fitted records, 0 violations, doubling drift {worst:.1e}, c-shift {ws:.1e}"))
}

fn criterion_10(shared: &Shared) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut longest = 0;
    for _ in 0..1000 {
        let p = 2.0 + (1.0 - rng.random_range(0.0..1.0)) * 48.0;
        let trace = c0_recursion_exponents(p).map_err(|e| e.to_string())?;
        let qs = trace.qs();
        ensure(qs.windows(2).all(|w| w[1] < w[0]), format!("q_i not strictly decreasing at p = {p}"))?;
        ensure(*qs.last().unwrap() <= p, format!("no stop at p = {p}"))?;
        longest = longest.max(trace.n());
    }
    let t = c0_recursion_exponents(4.0).map_err(|e| e.to_string())?;
    let qs = t.qs();
    // q₁ = p(p+2)/(p−2) = 12, p₁ = 2q₁/(q₁+2) = 12/7, q₂ = p·p₁/(p−p₁) = 3.
    ensure(t.n() == 1 && (qs[0] - 12.0).abs() < 1e-12 && (qs[1] - 3.0).abs() < 1e-12, format!("p = 4 trace {qs:?}"))?;
    let recs = by_check(&shared.report, "sobolev.recursion");
    ensure(recs.len() == 1100 && failures(&recs) == 0, format!("{} recursion records, {} failed", recs.len(), failures(&recs)))?;
    Ok(format!("1000 exponents terminate (max N = {longest}), p = 4 gives N = 1, q = {qs:?}"))
}

struct Shared {
    report: Report,
    constants: ConstantsFile,
}

struct CliRun {
    shared: Option<Shared>,
    verdict: Verdict,
}

fn geomest(args: &[&str]) -> Result<(i32, Duration), String> {
    let t = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_geomest")).args(args).status().map_err(|e| e.to_string())?;
    Ok((status.code().unwrap_or(-1), t.elapsed()))
}

fn without_wall(text: &str) -> Result<serde_json::Value, String> {
    let mut v: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    v["summary"].as_object_mut().ok_or("report has no summary")?.remove("wall_ms");
    Ok(v)
}

fn criterion_11(dir: &Path) -> CliRun {
    let run = || -> Result<(Shared, String), String> {
        let path = |n: &str| -> String { dir.join(n).to_string_lossy().into_owned() };
        let (constants, a, b) = (path("constants.json"), path("report-a.json"), path("report-b.json"));
        let (code, cal) = geomest(&["calibrate", "--suite", "all", "--constants", &constants])?;
        ensure(code == 0, format!("calibrate exited with {code}"))?;
        let mut lines = vec![format!("calibrate {:.0}s", cal.as_secs_f64())];
        for out in [&a, &b] {
            let (code, dt) = geomest(&["run", "--suite", "all", "--constants", &constants, "--out", out])?;
            ensure(code == 0, format!("run exited with {code}"))?;
            ensure(dt < Duration::from_secs(600), format!("run took {dt:?}"))?;
            lines.push(format!("run {:.0}s", dt.as_secs_f64()));
        }
        let (ta, tb) = (std::fs::read_to_string(&a).map_err(|e| e.to_string())?, std::fs::read_to_string(&b).map_err(|e| e.to_string())?);
        ensure(without_wall(&ta)? == without_wall(&tb)?, "reports differ between runs")?;
        let strip = |t: &str| t.lines().filter(|l| !l.contains("\"wall_ms\"")).collect::<Vec<_>>().join("\n");
        ensure(strip(&ta) == strip(&tb), "report bytes differ outside wall_ms")?;
        let report = Report::from_json(&ta).map_err(|e| e.to_string())?;
        let constants = ConstantsFile::load(Path::new(&constants)).map_err(|e| e.to_string())?;
        lines.push(format!("{} records identical across runs", report.summary.total));
        Ok((Shared { report, constants }, lines.join(", ")))
    };
    match run() {
        Ok((shared, msg)) => CliRun { shared: Some(shared), verdict: Ok(msg) },
        Err(e) => CliRun { shared: None, verdict: Err(e) },
    }
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    })
}

fn main() {
    let dir: PathBuf = std::env::temp_dir().join(format!("geomest-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");

    let cli = criterion_11(&dir);
    let with_shared = |f: fn(&Shared) -> Verdict| -> Verdict {
        match &cli.shared {
            Some(s) => guarded(|| f(s)),
            None => Err("needs the report of criterion 11".into()),
        }
    };
    let results: Vec<(&str, Verdict)> = vec![
        ("1 Christoffel/torsion/compatibility", guarded(criterion_1)),
        ("2 latitude holonomy and Gauss-Bonnet", guarded(criterion_2)),
        ("3 rectangle holonomy C_K", with_shared(criterion_3)),
        ("4 Fourier Poincare", guarded(criterion_4)),
        ("5 explicit-constant embeddings", with_shared(criterion_5)),
        ("6 quadratic expansion", with_shared(criterion_6)),
        ("7 D_J;Sigma independence", with_shared(criterion_7)),
        ("8 total-space complex structure", with_shared(criterion_8)),
        ("9 elliptic estimates", with_shared(criterion_9)),
        ("10 recursion arithmetic", with_shared(criterion_10)),
        ("11 CLI run --suite all", cli.verdict.clone()),
    ];
    let _ = std::fs::remove_dir_all(&dir);

    let mut failed = 0;
    for (name, v) in &results {
        match v {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
