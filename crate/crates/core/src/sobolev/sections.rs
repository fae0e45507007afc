use super::planar::{annulus_of, require_outer_support};
use super::{ConstantProvenance, InequalityRecord, FITTED_SLACK};
use crate::complexlin::{pullback_covariant, SectionAlongU};
use crate::error::{invalid, precondition, GeomError, Result};
use crate::grids::Grid;
use crate::linalg::g_norm;
use crate::transport::MetricBundle;

/// Pointwise magnitudes of sections along maps, measured with the fiber
/// metric of a bundle and the base metric for du.
#[derive(Debug, Clone)]
pub struct SectionSuite {
    bundle: MetricBundle<f64>,
}

/// |ξ|, |∇^uξ| and |du| at every node.
#[derive(Debug, Clone)]
pub struct SectionMagnitudes {
    pub value: Vec<f64>,
    pub covariant: Vec<f64>,
    pub du: Vec<f64>,
}

impl SectionSuite {
    pub fn new(bundle: MetricBundle<f64>) -> Self {
        Self { bundle }
    }

    pub fn bundle(&self) -> &MetricBundle<f64> {
        &self.bundle
    }

    pub fn magnitudes(&self, xi: &SectionAlongU) -> Result<SectionMagnitudes> {
        let u = xi.map();
        if self.bundle.rank() != xi.dim() || self.bundle.base.dim() != u.dim() {
            return Err(invalid("bundle does not match the section or the map"));
        }
        let nabla = pullback_covariant(&self.bundle.connection, xi)?;
        let n = u.grid().node_count();
        let mut out = SectionMagnitudes { value: Vec::with_capacity(n), covariant: Vec::with_capacity(n), du: Vec::with_capacity(n) };
        for k in 0..n {
            let x = u.point(k);
            let h = (self.bundle.fiber_metric)(x);
            let g = self.bundle.base.eval(x);
            let (nx, ny) = nabla.at(k);
            let (ux, uy) = u.du(k);
            out.value.push(g_norm(&xi.at(k), &h));
            out.covariant.push(g_norm(&nx, &h).hypot(g_norm(&ny, &h)));
            out.du.push(g_norm(&ux, &g).hypot(g_norm(&uy, &g)));
        }
        Ok(out)
    }
}

/// ‖ξ‖_q ≤ C·R^{1−2/p+2/q}(‖∇^uξ‖_p + ‖ξ⊗du‖_p) for ξ vanishing on the
/// outer boundary of an annulus.
pub fn section_pq_embedding(
    suite: &SectionSuite,
    xi: &SectionAlongU,
    p: f64,
    q: f64,
    constant: f64,
) -> Result<InequalityRecord> {
    super::planar::pq_constant(p, q)?;
    let grid = xi.map().grid().clone();
    let g = annulus_of(xi.values())?;
    let m = suite.magnitudes(xi)?;
    require_outer_support(xi.values(), |k| m.value[k])?;
    let lhs = grid.lp(&m.value, q);
    let tensor: Vec<f64> = m.value.iter().zip(&m.du).map(|(a, b)| a * b).collect();
    let e = 1.0 - 2.0 / p + 2.0 / q;
    let structural = g.outer().powf(e) * (grid.lp(&m.covariant, p) + grid.lp(&tensor, p));
    Ok(InequalityRecord::new("pqplane_lmm", lhs, 0.0, structural, constant, ConstantProvenance::Fitted, FITTED_SLACK)
        .with_param("R", g.outer())
        .with_param("r", g.inner())
        .with_param("p", p)
        .with_param("q", q)
        .with_param("du_p", grid.lp(&m.du, p)))
}

/// ‖ξ‖_{C⁰} ≤ C(R, ‖du‖_p)‖ξ‖_{p,1} on an annulus with r ≤ R/2 or a torus.
/// The record stores ‖du‖_p for bucketed constants.
pub fn section_c0_bound(suite: &SectionSuite, xi: &SectionAlongU, p: f64, constant: f64) -> Result<InequalityRecord> {
    if !(p > 2.0) {
        return Err(invalid(format!("the C⁰ bound needs p > 2, got {p}")));
    }
    let grid = xi.map().grid().clone();
    let size = match &*grid {
        Grid::Annulus(g) => {
            if g.inner() > 0.5 * g.outer() {
                return Err(precondition(format!("need r ≤ R/2, got R = {}, r = {}", g.outer(), g.inner())));
            }
            g.outer()
        }
        Grid::Torus(g) => g.periods()[0].max(g.periods()[1]),
        _ => return Err(invalid("the C⁰ bound runs on annulus or torus grids")),
    };
    let m = suite.magnitudes(xi)?;
    let lhs = grid.lp(&m.value, f64::INFINITY);
    let structural = grid.lp(&m.value, p) + grid.lp(&m.covariant, p);
    Ok(InequalityRecord::new("c0bound_prp", lhs, 0.0, structural, constant, ConstantProvenance::Fitted, FITTED_SLACK)
        .with_param("R", size)
        .with_param("p", p)
        .with_param("du_p", grid.lp(&m.du, p)))
}

/// Exponents of the bootstrap from ‖ξ‖_{q₁} down to ‖ξ‖_{q_{N+1}}, q_{N+1} ≤ p.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionTrace {
    pub p: f64,
    /// (q_i, p_i) for i = 1..=N.
    pub steps: Vec<(f64, f64)>,
    /// q_{N+1}.
    pub last_q: f64,
}

impl RecursionTrace {
    /// The stop index N.
    pub fn n(&self) -> usize {
        self.steps.len()
    }

    /// q₁, …, q_{N+1}.
    pub fn qs(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.0).chain(std::iter::once(self.last_q)).collect()
    }
}

/// q₁ = p(p+2)/(p−2), p_i = 2q_i/(q_i+2), q_{i+1} = p·p_i/(p − p_i), stopped
/// at the first q_{N+1} ≤ p.
pub fn c0_recursion_exponents(p: f64) -> Result<RecursionTrace> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(invalid(format!("recursion needs p > 2, got {p}")));
    }
    let mut q = p * (p + 2.0) / (p - 2.0);
    let mut steps = Vec::new();
    while q > p {
        if steps.len() >= 100_000 {
            return Err(GeomError::Integration(format!("recursion for p = {p} did not terminate")));
        }
        let pi = 2.0 * q / (q + 2.0);
        steps.push((q, pi));
        q = p * pi / (p - pi);
    }
    Ok(RecursionTrace { p, steps, last_q: q })
}
