use std::f64::consts::PI;

use super::{require_mean_zero, ConstantProvenance, InequalityRecord, FITTED_SLACK};
use crate::error::{invalid, precondition, Result};
use crate::grids::{AnnulusGrid, Grid, GridFunction};

/// Constant of the mean-zero L¹ bound on B_{R,r}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnulusVariant {
    /// √(π/2)(1 + √ln(R/r)), needs r > 0.
    Log,
    /// 125√(2π)/4.
    Uniform,
}

impl AnnulusVariant {
    pub fn constant(self, outer: f64, inner: f64) -> Result<f64> {
        match self {
            AnnulusVariant::Log => {
                if !(inner > 0.0) {
                    return Err(invalid("the logarithmic constant needs an inner radius r > 0"));
                }
                Ok((PI / 2.0).sqrt() * (1.0 + (outer / inner).ln().sqrt()))
            }
            AnnulusVariant::Uniform => Ok(125.0 * (2.0 * PI).sqrt() / 4.0),
        }
    }

    fn id(self) -> &'static str {
        match self {
            AnnulusVariant::Log => "ellannbd_crl0",
            AnnulusVariant::Uniform => "ellannbd_crl",
        }
    }
}

pub(crate) fn annulus_of(f: &GridFunction) -> Result<&AnnulusGrid> {
    match &**f.grid() {
        Grid::Annulus(g) => Ok(g),
        _ => Err(invalid("expected a function on an annulus grid")),
    }
}

fn with_annulus(rec: InequalityRecord, g: &AnnulusGrid) -> InequalityRecord {
    rec.with_param("R", g.outer())
        .with_param("r", g.inner())
        .with_param("n_rho", g.n_rho() as f64)
        .with_param("n_theta", g.n_theta() as f64)
}

/// Lagrange weights extrapolating the five outermost radial nodes to ρ = R.
fn outer_extrapolation_weights() -> [f64; 5] {
    let xs: [f64; 5] = std::array::from_fn(|m| m as f64 + 0.5);
    std::array::from_fn(|m| {
        (0..5).filter(|&j| j != m).map(|j| -xs[j] / (xs[m] - xs[j])).product()
    })
}

/// Size of f on the circle ρ = R: the outermost ring value if the two outer
/// rings vanish to 1e-8 relative, else the quartic extrapolation.
pub(crate) fn outer_trace(f: &GridFunction, magnitude: impl Fn(usize) -> f64) -> Result<f64> {
    let g = annulus_of(f)?;
    let (nr, nt) = (g.n_rho(), g.n_theta());
    let dim = f.dim();
    let ring_max = |i: usize| (0..nt).map(|j| magnitude(i * nt + j)).fold(0.0, f64::max);
    let sup = (0..f.grid().node_count()).map(&magnitude).fold(0.0, f64::max);
    if ring_max(nr - 1).max(ring_max(nr - 2)) <= 1e-8 * sup {
        return Ok(ring_max(nr - 1));
    }
    let w = outer_extrapolation_weights();
    let mut worst: f64 = 0.0;
    for j in 0..nt {
        let mut s = 0.0;
        for c in 0..dim {
            let v: f64 = (0..5).map(|m| w[m] * f.at((nr - 1 - m) * nt + j)[c]).sum();
            s += v * v;
        }
        worst = worst.max(s.sqrt());
    }
    Ok(worst)
}

/// Compact support in B_R − B_r: the trace on ρ = R vanishes relative to
/// the sup norm.
pub(crate) fn require_outer_support(f: &GridFunction, magnitude: impl Fn(usize) -> f64) -> Result<()> {
    let sup = (0..f.grid().node_count()).map(&magnitude).fold(0.0, f64::max);
    let trace = outer_trace(f, magnitude)?;
    if trace > 1e-8 * sup {
        return Err(precondition(format!(
            "function must vanish on the outer boundary: trace {trace:e} against sup {sup:e}"
        )));
    }
    Ok(())
}

/// ‖ζ‖₁ ≤ C·R²‖dζ‖₂ for mean-zero ζ on B_{R,r}.
pub fn annulus_mean_zero_l1(zeta: &GridFunction, variant: AnnulusVariant) -> Result<InequalityRecord> {
    let g = annulus_of(zeta)?;
    let c = variant.constant(g.outer(), g.inner())?;
    let l1 = zeta.lp_norm(1.0);
    require_mean_zero(zeta, l1)?;
    let d2 = zeta.grid().lp(&zeta.gradient_norm()?, 2.0);
    let structural = g.outer().powi(2) * d2;
    let rec = InequalityRecord::new(variant.id(), l1, 0.0, structural, c, ConstantProvenance::Paper, 0.0);
    Ok(with_annulus(rec, g))
}

/// ‖ζ‖₂ ≤ ‖dζ‖₁ for ζ vanishing on the outer boundary.
pub fn l2_from_l1_gradient(zeta: &GridFunction) -> Result<InequalityRecord> {
    let g = annulus_of(zeta)?;
    let norms = zeta.pointwise_norm();
    require_outer_support(zeta, |k| norms[k])?;
    let lhs = zeta.lp_norm(2.0);
    let rhs = zeta.grid().lp(&zeta.gradient_norm()?, 1.0);
    let rec = InequalityRecord::new("loj_lmm", lhs, 0.0, rhs, 1.0, ConstantProvenance::Paper, 0.0);
    Ok(with_annulus(rec, g))
}

/// max(2, q)·π^{½(1 − 2/p + 2/q)}, defined when 1 − 2/p ≥ −2/q.
pub fn pq_constant(p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(invalid(format!("exponents must be >= 1, got p = {p}, q = {q}")));
    }
    let e = 1.0 - 2.0 / p + 2.0 / q;
    if e < -1e-12 {
        return Err(invalid(format!("exponents violate 1 − 2/p ≥ −2/q: p = {p}, q = {q}")));
    }
    Ok(q.max(2.0) * PI.powf(0.5 * e.max(0.0)))
}

/// ‖ξ‖_q ≤ C_{p,q}R^{1−2/p+2/q}‖dξ‖_p for ξ vanishing on the outer boundary.
pub fn pq_embedding(xi: &GridFunction, p: f64, q: f64) -> Result<InequalityRecord> {
    let c = pq_constant(p, q)?;
    let g = annulus_of(xi)?;
    let norms = xi.pointwise_norm();
    require_outer_support(xi, |k| norms[k])?;
    let lhs = xi.lp_norm(q);
    let e = 1.0 - 2.0 / p + 2.0 / q;
    let structural = g.outer().powf(e) * xi.grid().lp(&xi.gradient_norm()?, p);
    let rec = InequalityRecord::new("pqplane_crl", lhs, 0.0, structural, c, ConstantProvenance::Paper, 0.0);
    Ok(with_annulus(rec, g).with_param("p", p).with_param("q", q))
}

fn require_oscillation_setup(xi: &GridFunction, p: f64) -> Result<&AnnulusGrid> {
    if !(p > 2.0) {
        return Err(invalid(format!("the C⁰ estimates need p > 2, got {p}")));
    }
    let g = annulus_of(xi)?;
    if g.inner() > 0.5 * g.outer() {
        return Err(precondition(format!("need r ≤ R/2, got R = {}, r = {}", g.outer(), g.inner())));
    }
    Ok(g)
}

/// max |ξ(x) − ξ(y)| over node pairs; exact for scalars, over at most
/// 2048 stride-sampled nodes plus per-component extremes otherwise.
fn oscillation(xi: &GridFunction) -> f64 {
    let n = xi.grid().node_count();
    let dim = xi.dim();
    if dim == 1 {
        let (lo, hi) = xi.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        return if n == 0 { 0.0 } else { hi - lo };
    }
    let stride = n.div_ceil(2048).max(1);
    let mut picks: Vec<usize> = (0..n).step_by(stride).collect();
    for c in 0..dim {
        let comp = |k: usize| xi.at(k)[c];
        let argmax = (0..n).max_by(|&a, &b| comp(a).total_cmp(&comp(b)));
        let argmin = (0..n).min_by(|&a, &b| comp(a).total_cmp(&comp(b)));
        picks.extend(argmax);
        picks.extend(argmin);
    }
    let mut worst: f64 = 0.0;
    for (i, &a) in picks.iter().enumerate() {
        for &b in &picks[i + 1..] {
            let d: f64 = xi.at(a).iter().zip(xi.at(b)).map(|(u, v)| (u - v) * (u - v)).sum();
            worst = worst.max(d);
        }
    }
    worst.sqrt()
}

/// |ξ(x) − ξ(y)| ≤ C_p R^{(p−2)/p}‖dξ‖_p on B_{R,r}, r ≤ R/2.
pub fn oscillation_bound(xi: &GridFunction, p: f64, constant: f64) -> Result<InequalityRecord> {
    let g = require_oscillation_setup(xi, p)?;
    let lhs = oscillation(xi);
    let structural = g.outer().powf((p - 2.0) / p) * xi.grid().lp(&xi.gradient_norm()?, p);
    let rec = InequalityRecord::new("c0plane_crl0", lhs, 0.0, structural, constant, ConstantProvenance::Fitted, FITTED_SLACK);
    Ok(with_annulus(rec, g).with_param("p", p))
}

/// ‖ξ‖_{C⁰} ≤ (1 + C_p)R^{−2/p}(‖ξ‖_p + R‖dξ‖_p) on B_{R,r}, r ≤ R/2.
pub fn c0_embedding(xi: &GridFunction, p: f64, constant: f64) -> Result<InequalityRecord> {
    let g = require_oscillation_setup(xi, p)?;
    let lhs = xi.lp_norm(f64::INFINITY);
    let r = g.outer();
    let s = r.powf(-2.0 / p) * (xi.lp_norm(p) + r * xi.grid().lp(&xi.gradient_norm()?, p));
    let rec = InequalityRecord::new("c0plane_crl", lhs, s, s, constant, ConstantProvenance::Fitted, FITTED_SLACK);
    Ok(with_annulus(rec, g).with_param("p", p))
}

/// Built-in convex subdomains of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvexMask {
    Disk { center: [f64; 2], radius: f64 },
    /// {|y − c| < R, ⟨y − c, (cos φ, sin φ)⟩ > 0}.
    HalfDisk { center: [f64; 2], radius: f64, direction: f64 },
    /// The sector of B_R at the origin between angles `start` and
    /// `start + opening`, cut by the chord at distance `chord` from the
    /// origin perpendicular to the bisector. Convex only for opening ≤ π.
    Wedge { radius: f64, start: f64, opening: f64, chord: f64 },
}

/// Disk ∩ half-planes {n·y ≥ offset}.
struct Region {
    center: [f64; 2],
    radius: f64,
    planes: Vec<([f64; 2], f64)>,
}

impl Region {
    fn contains(&self, y: [f64; 2]) -> bool {
        let tol = 1e-12 * self.radius.max(1.0);
        let d = (y[0] - self.center[0]).hypot(y[1] - self.center[1]);
        d <= self.radius + tol && self.planes.iter().all(|(n, off)| n[0] * y[0] + n[1] * y[1] >= off - tol)
    }

    /// Distance from an interior x to the boundary along (cos φ, sin φ).
    fn ray(&self, x: [f64; 2], phi: f64) -> f64 {
        let d = [phi.cos(), phi.sin()];
        let rel = [x[0] - self.center[0], x[1] - self.center[1]];
        let b = d[0] * rel[0] + d[1] * rel[1];
        let c = rel[0] * rel[0] + rel[1] * rel[1] - self.radius * self.radius;
        let mut s = -b + (b * b - c).max(0.0).sqrt();
        for (n, off) in &self.planes {
            let nd = n[0] * d[0] + n[1] * d[1];
            if nd < 0.0 {
                s = s.min(((off - n[0] * x[0] - n[1] * x[1]) / nd).max(0.0));
            }
        }
        s
    }

    fn diameter(&self) -> f64 {
        let mut pts: Vec<[f64; 2]> = (0..1024)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 1024.0;
                [self.center[0] + self.radius * t.cos(), self.center[1] + self.radius * t.sin()]
            })
            .collect();
        for (i, (n, off)) in self.planes.iter().enumerate() {
            let p0 = [n[0] * off, n[1] * off];
            let dir = [-n[1], n[0]];
            let rel = [p0[0] - self.center[0], p0[1] - self.center[1]];
            let b = dir[0] * rel[0] + dir[1] * rel[1];
            let c = rel[0] * rel[0] + rel[1] * rel[1] - self.radius * self.radius;
            if b * b >= c {
                for s in [-b + (b * b - c).sqrt(), -b - (b * b - c).sqrt()] {
                    pts.push([p0[0] + s * dir[0], p0[1] + s * dir[1]]);
                }
            }
            for (m, moff) in &self.planes[i + 1..] {
                let det = n[0] * m[1] - n[1] * m[0];
                if det.abs() > 1e-14 {
                    pts.push([(off * m[1] - moff * n[1]) / det, (n[0] * moff - m[0] * off) / det]);
                }
            }
        }
        pts.retain(|&y| self.contains(y));
        let mut d: f64 = 0.0;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                d = d.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        d
    }
}

impl ConvexMask {
    fn region(&self) -> Result<Region> {
        match *self {
            ConvexMask::Disk { center, radius } => {
                if !(radius > 0.0) {
                    return Err(invalid("disk radius must be positive"));
                }
                Ok(Region { center, radius, planes: vec![] })
            }
            ConvexMask::HalfDisk { center, radius, direction } => {
                if !(radius > 0.0) {
                    return Err(invalid("half-disk radius must be positive"));
                }
                let n = [direction.cos(), direction.sin()];
                Ok(Region { center, radius, planes: vec![(n, n[0] * center[0] + n[1] * center[1])] })
            }
            ConvexMask::Wedge { radius, start, opening, chord } => {
                if !(opening > 0.0 && opening <= PI) {
                    return Err(invalid(format!("wedge with opening {opening} is not convex")));
                }
                if !(chord >= 0.0 && chord < radius) {
                    return Err(invalid("wedge chord must lie inside the disk"));
                }
                let end = start + opening;
                let mid = start + 0.5 * opening;
                Ok(Region {
                    center: [0.0, 0.0],
                    radius,
                    planes: vec![
                        ([-start.sin(), start.cos()], 0.0),
                        ([end.sin(), -end.cos()], 0.0),
                        ([mid.cos(), mid.sin()], chord),
                    ],
                })
            }
        }
    }

    pub fn contains(&self, y: [f64; 2]) -> Result<bool> {
        Ok(self.region()?.contains(y))
    }

    pub fn diameter(&self) -> Result<f64> {
        Ok(self.region()?.diameter())
    }
}

/// Local spacing of the grid around a node.
fn local_spacing(grid: &Grid, node: usize) -> Result<f64> {
    match grid {
        Grid::Annulus(g) => Ok(g.d_rho().max(g.rho(node / g.n_theta()) * g.d_theta())),
        Grid::Rect(g) => Ok(g.h_s().max(g.h_t())),
        Grid::Torus(g) => Ok((g.periods()[0] / g.nx() as f64).max(g.periods()[1] / g.ny() as f64)),
        Grid::Circle(_) => Err(invalid("the mean-value bound needs a planar grid")),
    }
}

/// |ξ_D − ξ(x)| ≤ (2r₀²/|D|)∫_D |dξ||y − x|⁻¹dy with 2r₀ = diam D. On the
/// disk of radius 2Δ around x the kernel is integrated in polar
/// coordinates with |dξ| frozen at x.
pub fn convex_mean_value(xi: &GridFunction, mask: &ConvexMask, node: usize) -> Result<InequalityRecord> {
    let grid = xi.grid();
    let region = mask.region()?;
    let delta = 2.0 * local_spacing(grid, node)?;
    if node >= grid.node_count() {
        return Err(invalid(format!("node {node} out of range")));
    }
    let x = grid.node(node).cart;
    if !region.contains(x) {
        return Err(invalid(format!("node {node} at {x:?} is outside the mask")));
    }
    let grad = xi.gradient_norm()?;
    let (mut area, mut integral) = (0.0, vec![0.0; xi.dim()]);
    let mut kernel = 0.0;
    for y in grid.nodes() {
        if !region.contains(y.cart) {
            continue;
        }
        let w = grid.weight(y.index);
        area += w;
        for ((acc, v), v0) in integral.iter_mut().zip(xi.at(y.index)).zip(xi.at(node)) {
            *acc += w * (v - v0);
        }
        let dist = (y.cart[0] - x[0]).hypot(y.cart[1] - x[1]);
        if dist > delta {
            kernel += w * grad[y.index] / dist;
        }
    }
    let n_phi = 512;
    let near: f64 = (0..n_phi)
        .map(|k| region.ray(x, 2.0 * PI * (k as f64 + 0.5) / n_phi as f64).min(delta))
        .sum::<f64>()
        * (2.0 * PI / n_phi as f64);
    kernel += grad[node] * near;
    if !(area > 0.0) {
        return Err(invalid("mask contains no grid nodes"));
    }
    let lhs = integral.iter().map(|s| (s / area).powi(2)).sum::<f64>().sqrt();
    let r0 = 0.5 * region.diameter();
    let structural = 2.0 * r0 * r0 / area * kernel;
    Ok(InequalityRecord::new("c0plane_lmm", lhs, 0.0, structural, 1.0, ConstantProvenance::Paper, 0.0)
        .with_param("node", node as f64)
        .with_param("area", area)
        .with_param("r0", r0))
}
