//! Interior and global ∂̄ estimates on annuli and the flat torus.
//!
//! ℂ^k-valued functions are stored with interleaved real and imaginary
//! parts. (0,1)-forms are measured by |η(∂_x)|. All constants here are
//! fitted, so every record carries `ConstantProvenance::Fitted`.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::complexlin::{cr_pullback, pullback_covariant, CrOperator, SectionAlongU};
use crate::error::{invalid, precondition, Result};
use crate::grids::{AnnulusGrid, Grid, GridFunction};
use crate::riemann::ChartBox;
use crate::sobolev::{c0_recursion_exponents, ConstantProvenance, InequalityRecord, RecursionTrace, FITTED_SLACK};

const RADIUS_TOLERANCE: f64 = 1e-12;

/// A₂ = B_{R₂,r₂} ⋐_δ A₁ = B_{R₁,r₁}: R₁ − R₂ > δ and r₂ − r₁ ≥ δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusPair {
    outer: [f64; 2],
    inner: [f64; 2],
    delta: f64,
}

impl AnnulusPair {
    /// `outer = [R₁, r₁]`, `inner = [R₂, r₂]`.
    pub fn new(outer: [f64; 2], inner: [f64; 2], delta: f64) -> Result<Self> {
        let [r1_out, r1_in] = outer;
        let [r2_out, r2_in] = inner;
        let finite = [r1_out, r1_in, r2_out, r2_in, delta].iter().all(|v| v.is_finite());
        if !finite || !(delta > 0.0) || !(r1_in >= 0.0) || !(r2_in < r2_out) {
            return Err(invalid(format!("bad annulus pair {outer:?} ⊃ {inner:?} with δ = {delta}")));
        }
        if !(r1_out - r2_out > delta) || !(r2_in - r1_in >= delta * (1.0 - 1e-12)) {
            return Err(invalid(format!("{inner:?} is not δ-inside {outer:?} for δ = {delta}")));
        }
        Ok(Self { outer, inner, delta })
    }

    /// A₂ = B_{R₁−2δ, r₁+2δ}.
    pub fn inset(outer: [f64; 2], delta: f64) -> Result<Self> {
        Self::new(outer, [outer[0] - 2.0 * delta, outer[1] + 2.0 * delta], delta)
    }

    pub fn outer(&self) -> [f64; 2] {
        self.outer
    }

    pub fn inner(&self) -> [f64; 2] {
        self.inner
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// ρ ∈ [r₂, R₂].
    pub fn in_inner(&self, rho: f64) -> bool {
        self.inner[1] <= rho && rho <= self.inner[0]
    }

    fn annulus<'a>(&self, grid: &'a Grid) -> Result<&'a AnnulusGrid> {
        let Grid::Annulus(g) = grid else {
            return Err(invalid("interior estimates run on annulus grids"));
        };
        let close = |a: f64, b: f64| (a - b).abs() <= RADIUS_TOLERANCE * (1.0 + b.abs());
        if !close(g.outer(), self.outer[0]) || !close(g.inner(), self.outer[1]) {
            return Err(invalid(format!(
                "grid annulus ({}, {}) is not the outer annulus {:?}",
                g.outer(),
                g.inner(),
                self.outer
            )));
        }
        Ok(g)
    }

    fn mask<'a>(&'a self, g: &'a AnnulusGrid) -> impl Fn(usize) -> bool + 'a {
        move |k| self.in_inner(g.rho(k / g.n_theta()))
    }

    fn tag(&self, rec: InequalityRecord, g: &AnnulusGrid, p: f64) -> InequalityRecord {
        rec.with_param("delta", self.delta)
            .with_param("p", p)
            .with_param("R1", self.outer[0])
            .with_param("r1", self.outer[1])
            .with_param("R2", self.inner[0])
            .with_param("r2", self.inner[1])
            .with_param("n_rho", g.n_rho() as f64)
            .with_param("n_theta", g.n_theta() as f64)
    }
}

fn require_complex(f: &GridFunction) -> Result<()> {
    if f.dim() == 0 || f.dim() % 2 != 0 {
        return Err(invalid(format!("expected a ℂ^k-valued function, got {} real components", f.dim())));
    }
    Ok(())
}

fn require_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid(format!("exponent must be finite and >= 1, got {p}")));
    }
    Ok(())
}

/// ∂̄f = ½(∂_x + i∂_y)f, componentwise.
pub fn dbar(f: &GridFunction) -> Result<GridFunction> {
    require_complex(f)?;
    if let Grid::Circle(_) = &**f.grid() {
        return Err(invalid("∂̄ needs a two-dimensional grid"));
    }
    let (fx, fy) = f.cartesian_gradient()?;
    let mut out = GridFunction::zeros(f.grid().clone(), f.dim());
    let (x, y) = (fx.values(), fy.values());
    for (i, pair) in out.values_mut().chunks_mut(2).enumerate() {
        let (re, im) = (2 * i, 2 * i + 1);
        pair[0] = 0.5 * (x[re] - y[im]);
        pair[1] = 0.5 * (x[im] + y[re]);
    }
    Ok(out)
}

/// ‖ξ|_{A₂}‖_{p,1} ≤ C(‖∂̄ξ‖_p + ‖dξ‖₂ + ‖ξ‖₁), norms on the right over A₁.
pub fn interior_lp1_estimate(xi: &GridFunction, pair: &AnnulusPair, p: f64, constant: f64) -> Result<InequalityRecord> {
    require_exponent(p)?;
    require_complex(xi)?;
    let grid = xi.grid().clone();
    let g = pair.annulus(&grid)?;
    let value = xi.pointwise_norm();
    let grad = xi.gradient_norm()?;
    let keep = pair.mask(g);
    let lhs = grid.lp_masked(&value, p, &keep) + grid.lp_masked(&grad, p, &keep);
    let structural = dbar(xi)?.lp_norm(p) + grid.lp(&grad, 2.0) + grid.lp(&value, 1.0);
    let rec = InequalityRecord::new("elli_lmm1", lhs, 0.0, structural, constant, ConstantProvenance::Fitted, FITTED_SLACK);
    Ok(pair.tag(rec, g, p))
}

/// ‖dξ|_{A₂}‖_p ≤ C(‖∂̄ξ‖_p + ‖dξ‖₂), evaluated on ξ minus its mean.
pub fn interior_gradient_estimate(
    xi: &GridFunction,
    pair: &AnnulusPair,
    p: f64,
    constant: f64,
) -> Result<InequalityRecord> {
    require_exponent(p)?;
    require_complex(xi)?;
    let grid = xi.grid().clone();
    let g = pair.annulus(&grid)?;
    let centered = xi.mean_free()?;
    let grad = centered.gradient_norm()?;
    let lhs = grid.lp_masked(&grad, p, pair.mask(g));
    let structural = dbar(&centered)?.lp_norm(p) + grid.lp(&grad, 2.0);
    let rec = InequalityRecord::new("elli_crl", lhs, 0.0, structural, constant, ConstantProvenance::Fitted, FITTED_SLACK);
    Ok(pair.tag(rec, g, p))
}

/// A generalized CR operator D = ∂̄_∇ + A together with the compact chart
/// region its maps must stay in.
#[derive(Debug, Clone)]
pub struct CROperatorSpec {
    op: CrOperator,
    compact: ChartBox,
    a_bound: f64,
}

impl CROperatorSpec {
    /// Probes A on unit vectors at the center and corners of `compact`.
    pub fn new(op: CrOperator, compact: ChartBox) -> Result<Self> {
        let n = op.target().dim();
        if compact.dim() != n {
            return Err(invalid("compact set and target have different dimensions"));
        }
        let mut a_bound: f64 = 0.0;
        if let Some(a) = op.zeroth_order() {
            let mut probes = vec![compact.center()];
            if n <= 6 {
                for mask in 0..1usize << n {
                    probes.push((0..n).map(|i| if mask >> i & 1 == 1 { compact.hi[i] } else { compact.lo[i] }).collect());
                }
            }
            let k = op.rank();
            for x in &probes {
                for i in 0..n {
                    let mut w = vec![0.0; n];
                    w[i] = 1.0;
                    for j in 0..k {
                        let v = a(x, &w, &DVector::from_fn(k, |r, _| if r == j { 1.0 } else { 0.0 }))?;
                        let size = v.norm();
                        if !size.is_finite() {
                            return Err(invalid(format!("zeroth-order term is unbounded at {x:?}")));
                        }
                        a_bound = a_bound.max(size);
                    }
                }
            }
        }
        Ok(Self { op, compact, a_bound })
    }

    pub fn operator(&self) -> &CrOperator {
        &self.op
    }

    pub fn compact(&self) -> &ChartBox {
        &self.compact
    }

    /// Largest |A(e_i, e_j)| seen on the probe set.
    pub fn a_bound(&self) -> f64 {
        self.a_bound
    }

    fn require_image(&self, xi: &SectionAlongU) -> Result<()> {
        let u = xi.map();
        if let Some(k) = (0..u.grid().node_count()).find(|&k| !self.compact.contains(u.point(k))) {
            return Err(precondition(format!("u leaves the compact set at node {k}: {:?}", u.point(k))));
        }
        Ok(())
    }
}

struct CrNorms {
    covariant: Vec<f64>,
    d_u: Vec<f64>,
    tensor: Vec<f64>,
    value: Vec<f64>,
    du: Vec<f64>,
}

fn cr_norms(xi: &SectionAlongU, spec: &CROperatorSpec) -> Result<CrNorms> {
    spec.require_image(xi)?;
    let op = spec.operator();
    let covariant = pullback_covariant(op.connection(), xi)?.frobenius();
    let d_u = cr_pullback(op, xi)?.dx().pointwise_norm();
    let value = xi.values().pointwise_norm();
    let du = xi.map().du_norm();
    let tensor = value.iter().zip(&du).map(|(a, b)| a * b).collect();
    Ok(CrNorms { covariant, d_u, tensor, value, du })
}

/// ‖∇^uξ|_{A₂}‖_p ≤ C(‖D_uξ‖_p + ‖∇^uξ‖₂ + ‖ξ⊗du‖_p).
pub fn cr_interior_estimate(
    xi: &SectionAlongU,
    spec: &CROperatorSpec,
    pair: &AnnulusPair,
    p: f64,
    constant: f64,
) -> Result<InequalityRecord> {
    require_exponent(p)?;
    let grid = xi.map().grid().clone();
    let g = pair.annulus(&grid)?;
    let m = cr_norms(xi, spec)?;
    let lhs = grid.lp_masked(&m.covariant, p, pair.mask(g));
    let structural = grid.lp(&m.d_u, p) + grid.lp(&m.covariant, 2.0) + grid.lp(&m.tensor, p);
    let rec = InequalityRecord::new("elli_prp1", lhs, 0.0, structural, constant, ConstantProvenance::Fitted, FITTED_SLACK);
    Ok(pair.tag(rec, g, p).with_param("du_p", grid.lp(&m.du, p)))
}

/// A global estimate record together with the exponent bootstrap behind it.
#[derive(Debug, Clone)]
pub struct GlobalEstimate {
    pub record: InequalityRecord,
    pub trace: RecursionTrace,
}

/// ‖ξ‖_{p,1} ≤ C(‖du‖_p)(‖D_uξ‖_p + ‖ξ‖_p) on the flat torus, p > 2.
pub fn global_estimate(xi: &SectionAlongU, spec: &CROperatorSpec, p: f64, constant: f64) -> Result<GlobalEstimate> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(invalid(format!("the global estimate needs p > 2, got {p}")));
    }
    let grid = xi.map().grid().clone();
    let Grid::Torus(t) = &*grid else {
        return Err(invalid("the global estimate runs on torus grids"));
    };
    let m = cr_norms(xi, spec)?;
    let trace = c0_recursion_exponents(p)?;
    let value_p = grid.lp(&m.value, p);
    let lhs = value_p + grid.lp(&m.covariant, p);
    let structural = grid.lp(&m.d_u, p) + value_p;
    let [lx, ly] = t.periods();
    let record = InequalityRecord::new("elli_prp2", lhs, 0.0, structural, constant, ConstantProvenance::Fitted, FITTED_SLACK)
        .with_param("p", p)
        .with_param("du_p", grid.lp(&m.du, p))
        .with_param("L", lx.max(ly))
        .with_param("nx", t.nx() as f64)
        .with_param("ny", t.ny() as f64)
        .with_param("recursion_n", trace.n() as f64)
        .with_param("q_final", trace.last_q);
    Ok(GlobalEstimate { record, trace })
}

/// min over resolved nonzero Fourier modes e^{i⟨η, x⟩} of ‖∂̄ξ‖₂/‖dξ‖₂
/// for the discrete operator on a torus grid. Nyquist modes are skipped.
pub fn ellipticity_floor(grid: &Arc<Grid>) -> Result<f64> {
    let Grid::Torus(t) = &**grid else {
        return Err(invalid("the ellipticity floor is computed on torus grids"));
    };
    let [lx, ly] = t.periods();
    let signed = |k: usize, n: usize| if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
    let mut floor = f64::INFINITY;
    for kx in 0..t.nx() {
        for ky in 0..t.ny() {
            if (kx == 0 && ky == 0) || 2 * kx == t.nx() || 2 * ky == t.ny() {
                continue;
            }
            let eta = [2.0 * std::f64::consts::PI * signed(kx, t.nx()) / lx, 2.0 * std::f64::consts::PI * signed(ky, t.ny()) / ly];
            let f = GridFunction::sample_complex(grid.clone(), 1, |node, out| {
                out[0] = Complex64::from_polar(1.0, eta[0] * node.cart[0] + eta[1] * node.cart[1]);
            });
            let grad = grid.lp(&f.gradient_norm()?, 2.0);
            if grad > 0.0 {
                floor = floor.min(dbar(&f)?.lp_norm(2.0) / grad);
            }
        }
    }
    Ok(floor)
}
