//! Seeded random test data.
//!
//! Trig coefficients are drawn uniformly in [−1, 1] and scaled by
//! `amplitude·max(k, 1)^{−decay}`, k the total mode index. On annuli the
//! angular mode k carries a factor (ρ/R)^k so that disks stay smooth at the
//! origin.

use std::f64::consts::PI;
use std::sync::Arc;

use geomest_core::complexlin::MapU;
use geomest_core::grids::{Grid, GridFunction, NodePoint};
use geomest_core::GeomError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    TrigPolynomial,
    /// A bump of random center and width times a low-mode trig factor.
    RadialBump,
    /// `center + trig polynomial` with `center.len()` components.
    RandomMapToTarget { center: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomFamily {
    pub kind: FamilyKind,
    pub decay: f64,
    pub max_mode: usize,
    pub amplitude: f64,
    /// Components of generated functions; maps use the target dimension.
    pub dim: usize,
    pub mean_zero: bool,
    pub supported: bool,
}

impl RandomFamily {
    fn of(kind: FamilyKind, max_mode: usize) -> Self {
        Self { kind, decay: 2.5, max_mode, amplitude: 1.0, dim: 1, mean_zero: false, supported: false }
    }

    pub fn trig(max_mode: usize) -> Self {
        Self::of(FamilyKind::TrigPolynomial, max_mode)
    }

    pub fn radial_bump(max_mode: usize) -> Self {
        Self::of(FamilyKind::RadialBump, max_mode)
    }

    pub fn map_to(center: Vec<f64>, max_mode: usize) -> Self {
        Self::of(FamilyKind::RandomMapToTarget { center }, max_mode)
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_decay(mut self, decay: f64) -> Self {
        self.decay = decay;
        self
    }

    /// Subtracts the quadrature mean, after any support cutoff.
    pub fn mean_zero(mut self) -> Self {
        self.mean_zero = true;
        self
    }

    /// Multiplies by the margin bump of the grid.
    pub fn supported(mut self) -> Self {
        self.supported = true;
        self
    }
}

#[derive(Debug, Clone)]
pub enum Generated {
    Function(GridFunction),
    Map(MapU),
}

impl Generated {
    pub fn into_function(self) -> Result<GridFunction> {
        match self {
            Generated::Function(f) => Ok(f),
            Generated::Map(_) => Err(GeomError::InvalidArgument("family generates maps, not functions".into()).into()),
        }
    }

    pub fn into_map(self) -> Result<MapU> {
        match self {
            Generated::Map(u) => Ok(u),
            Generated::Function(_) => Err(GeomError::InvalidArgument("family generates functions, not maps".into()).into()),
        }
    }
}

/// exp(1 − 1/(1 − t²)) on (−1, 1), zero outside.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Number of nodes along the least resolved spectral or FD direction.
fn resolved_nodes(grid: &Grid) -> usize {
    match grid {
        Grid::Circle(g) => g.n_points(),
        Grid::Annulus(g) => g.n_rho().min(g.n_theta()),
        Grid::Rect(g) => g.n_s().min(g.n_t()),
        Grid::Torus(g) => g.nx().min(g.ny()),
    }
}

/// Normalized coordinates: θ for circles, (s, θ) with s ∈ [0, 1] radial
/// for annuli, (s, t) ∈ [0, 1]² for rectangles, angles for tori.
fn unit_coords(grid: &Grid, node: &NodePoint) -> [f64; 2] {
    match grid {
        Grid::Circle(_) => [node.native[0], 0.0],
        Grid::Annulus(g) => [(node.native[0] - g.inner()) / (g.outer() - g.inner()), node.native[1]],
        Grid::Rect(g) => {
            let [a, b, c, d] = g.bounds();
            [(node.native[0] - a) / (b - a), (node.native[1] - c) / (d - c)]
        }
        Grid::Torus(g) => {
            let [lx, ly] = g.periods();
            [2.0 * PI * node.native[0] / lx, 2.0 * PI * node.native[1] / ly]
        }
    }
}

/// One term: coefficient pairs per component for a (k, m) mode.
struct Term {
    k: i32,
    m: i32,
    a: Vec<f64>,
    b: Vec<f64>,
}

struct Trig {
    terms: Vec<Term>,
    kind: TrigShape,
}

#[derive(Clone, Copy)]
enum TrigShape {
    Circle,
    /// Angular mode k with radial factor (ρ/R)^k cos(mπs).
    Annulus { outer: f64 },
    Rect,
    Torus,
}

impl Trig {
    fn random(rng: &mut ChaCha8Rng, grid: &Grid, max_mode: usize, dim: usize, amplitude: f64, decay: f64) -> Self {
        let kmax = max_mode as i32;
        let (shape, modes): (TrigShape, Vec<(i32, i32)>) = match grid {
            Grid::Circle(_) => (TrigShape::Circle, (0..=kmax).map(|k| (k, 0)).collect()),
            Grid::Annulus(g) => (
                TrigShape::Annulus { outer: g.outer() },
                (0..=kmax).flat_map(|k| (0..=kmax).map(move |m| (k, m))).collect(),
            ),
            Grid::Rect(_) => (TrigShape::Rect, (0..=kmax).flat_map(|k| (0..=kmax).map(move |m| (k, m))).collect()),
            Grid::Torus(_) => (
                TrigShape::Torus,
                (-kmax..=kmax).flat_map(|k| (0..=kmax).map(move |m| (k, m))).filter(|&(k, m)| m > 0 || k >= 0).collect(),
            ),
        };
        let terms = modes
            .into_iter()
            .map(|(k, m)| {
                let order = match shape {
                    TrigShape::Torus => ((k * k + m * m) as f64).sqrt(),
                    TrigShape::Circle => k as f64,
                    _ => (k + m) as f64,
                };
                let w = amplitude * order.max(1.0).powf(-decay);
                let mut draw = || (0..dim).map(|_| w * rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
                let a = draw();
                let b = draw();
                Term { k, m, a, b }
            })
            .collect();
        Self { terms, kind: shape }
    }

    fn eval(&self, node: &NodePoint, unit: [f64; 2], out: &mut [f64]) {
        out.fill(0.0);
        for t in &self.terms {
            let (k, m) = (t.k as f64, t.m as f64);
            let (c, s) = match self.kind {
                TrigShape::Circle => ((k * unit[0]).cos(), (k * unit[0]).sin()),
                TrigShape::Annulus { outer } => {
                    let radial = (node.native[0] / outer).powi(t.k) * (m * PI * unit[0]).cos();
                    (radial * (k * unit[1]).cos(), radial * (k * unit[1]).sin())
                }
                TrigShape::Rect => {
                    ((k * PI * unit[0]).cos() * (m * PI * unit[1]).cos(), (k * PI * unit[0]).sin() * (m * PI * unit[1]).sin())
                }
                TrigShape::Torus => {
                    let phase = k * unit[0] + m * unit[1];
                    (phase.cos(), phase.sin())
                }
            };
            for (o, (a, b)) in out.iter_mut().zip(t.a.iter().zip(&t.b)) {
                *o += a * c + b * s;
            }
        }
    }
}

/// Smooth cutoff vanishing on the boundary of the grid domain.
fn margin_bump(grid: &Grid, unit: [f64; 2]) -> Result<f64> {
    Ok(match grid {
        Grid::Annulus(g) if g.inner() == 0.0 => bump(unit[0]),
        Grid::Annulus(_) => bump(2.0 * unit[0] - 1.0),
        Grid::Rect(_) => bump(2.0 * unit[0] - 1.0) * bump(2.0 * unit[1] - 1.0),
        Grid::Circle(_) | Grid::Torus(_) => {
            return Err(GeomError::InvalidArgument("supported variants need a grid with boundary".into()).into())
        }
    })
}

/// Bump profile `center ± width` in normalized coordinates.
struct Bump {
    center: [f64; 2],
    width: f64,
}

impl Bump {
    fn random(rng: &mut ChaCha8Rng, grid: &Grid) -> Self {
        // Keep the support two cells away from any boundary.
        match grid {
            Grid::Circle(_) => Self { center: [rng.random_range(0.0..2.0 * PI), 0.0], width: rng.random_range(0.3..1.5) },
            Grid::Annulus(g) => {
                let margin = 2.0 / g.n_rho() as f64;
                let width = rng.random_range(0.1..0.4);
                let lo = if g.inner() == 0.0 { 0.0 } else { width + margin };
                let hi = (1.0 - width - margin).max(lo + 1e-9);
                Self { center: [rng.random_range(lo..hi), 0.0], width }
            }
            Grid::Rect(g) => {
                let margin = 2.0 / g.n_s().min(g.n_t()) as f64;
                let width = rng.random_range(0.1..0.35);
                let lo = width + margin;
                let hi = (1.0 - width - margin).max(lo + 1e-9);
                Self { center: [rng.random_range(lo..hi), rng.random_range(lo..hi)], width }
            }
            Grid::Torus(_) => Self {
                center: [rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)],
                width: rng.random_range(0.5..2.0),
            },
        }
    }

    fn eval(&self, grid: &Grid, unit: [f64; 2]) -> f64 {
        let wrap = |d: f64| (d + PI).rem_euclid(2.0 * PI) - PI;
        let dist = match grid {
            Grid::Circle(_) => wrap(unit[0] - self.center[0]).abs(),
            Grid::Annulus(_) => (unit[0] - self.center[0]).abs(),
            Grid::Rect(_) => (unit[0] - self.center[0]).hypot(unit[1] - self.center[1]),
            Grid::Torus(_) => wrap(unit[0] - self.center[0]).hypot(wrap(unit[1] - self.center[1])),
        };
        bump(dist / self.width)
    }
}

/// Draws one member of `family` on `grid`; identical (family, grid, seed)
/// give bit-identical values.
pub fn generate(family: &RandomFamily, grid: &Arc<Grid>, seed: u64) -> Result<Generated> {
    if family.max_mode > resolved_nodes(grid) / 4 {
        return Err(GeomError::Resolution(format!(
            "max mode {} exceeds a quarter of the {} resolved nodes",
            family.max_mode,
            resolved_nodes(grid)
        ))
        .into());
    }
    if !(family.decay.is_finite() && family.amplitude.is_finite()) {
        return Err(GeomError::InvalidArgument("decay and amplitude must be finite".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = match &family.kind {
        FamilyKind::RandomMapToTarget { center } => center.len(),
        _ => family.dim,
    };
    if dim == 0 {
        return Err(GeomError::InvalidArgument("family needs at least one component".into()).into());
    }
    let trig = Trig::random(&mut rng, grid, family.max_mode, dim, family.amplitude, family.decay);
    let profile = match family.kind {
        FamilyKind::RadialBump => Some(Bump::random(&mut rng, grid)),
        _ => None,
    };
    let offset: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    if family.supported {
        margin_bump(grid, [0.5, 0.5])?;
    }

    let g = grid.clone();
    let value = |node: &NodePoint, out: &mut [f64]| {
        let unit = unit_coords(&g, node);
        trig.eval(node, unit, out);
        if let Some(p) = &profile {
            let b = family.amplitude * p.eval(&g, unit);
            for (o, c) in out.iter_mut().zip(&offset) {
                *o = b * (c + *o);
            }
        }
        if family.supported {
            let m = margin_bump(&g, unit).unwrap_or(0.0);
            out.iter_mut().for_each(|o| *o *= m);
        }
    };

    match &family.kind {
        FamilyKind::RandomMapToTarget { center } => {
            if family.mean_zero {
                return Err(GeomError::InvalidArgument("maps have no mean-zero variant".into()).into());
            }
            let mut f = GridFunction::sample(grid.clone(), dim, value);
            for (k, v) in f.values_mut().iter_mut().enumerate() {
                *v += center[k % dim];
            }
            let (dx, dy) = f.cartesian_gradient()?;
            Ok(Generated::Map(MapU::from_parts(f, dx, dy)?))
        }
        _ => {
            let f = GridFunction::sample(grid.clone(), dim, value);
            Ok(Generated::Function(if family.mean_zero { f.mean_free()? } else { f }))
        }
    }
}
