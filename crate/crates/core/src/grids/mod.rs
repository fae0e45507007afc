//! Structured grids with quadrature and differentiation.
//!
//! Nodes are stored row-major over two axes `(i0, i1)`; the circle is the
//! one-axis case with `n1 = 1`. A [`GridFunction`] stores `dim` real
//! components per node, complex data is interleaved as `(re, im)` pairs.

mod fd;
mod spectral;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, GeomError, Result};

pub use spectral::SpectralAxis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Periodic,
    Bounded,
}

/// Sample points of S¹ with uniform weights.
#[derive(Debug, Clone)]
pub struct CircleGrid {
    n: usize,
    axis: SpectralAxis,
}

impl CircleGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(invalid(format!("circle grid needs an even n >= 8, got {n}")));
        }
        Ok(Self { n, axis: SpectralAxis::new(n, 2.0 * PI) })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn theta(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n as f64
    }

    pub fn weight(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn axis(&self) -> &SpectralAxis {
        &self.axis
    }
}

/// Polar tensor grid on B_{R,r} with cell-centered radial nodes.
#[derive(Debug, Clone)]
pub struct AnnulusGrid {
    outer: f64,
    inner: f64,
    n_rho: usize,
    n_theta: usize,
    axis: SpectralAxis,
}

impl AnnulusGrid {
    pub fn new(outer: f64, inner: f64, n_rho: usize, n_theta: usize) -> Result<Self> {
        if !(inner >= 0.0 && inner < outer && outer.is_finite()) {
            return Err(invalid(format!("annulus radii must satisfy 0 <= r < R, got R={outer}, r={inner}")));
        }
        if n_rho < fd::MIN_NODES {
            return Err(GeomError::Resolution(format!("n_rho = {n_rho} is below the stencil width")));
        }
        if n_theta < 8 || n_theta % 2 != 0 {
            return Err(invalid(format!("n_theta must be even and >= 8, got {n_theta}")));
        }
        Ok(Self { outer, inner, n_rho, n_theta, axis: SpectralAxis::new(n_theta, 2.0 * PI) })
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn n_rho(&self) -> usize {
        self.n_rho
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn d_rho(&self) -> f64 {
        (self.outer - self.inner) / self.n_rho as f64
    }

    pub fn d_theta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn rho(&self, i: usize) -> f64 {
        self.inner + (i as f64 + 0.5) * self.d_rho()
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.d_theta()
    }
}

/// Uniform product grid on [a,b]×[c,d], endpoints included.
#[derive(Debug, Clone)]
pub struct RectGrid {
    bounds: [f64; 4],
    n_s: usize,
    n_t: usize,
}

impl RectGrid {
    pub fn new(a: f64, b: f64, c: f64, d: f64, n_s: usize, n_t: usize) -> Result<Self> {
        if !(a < b && c < d) {
            return Err(invalid("rectangle bounds must satisfy a < b and c < d"));
        }
        if n_s < fd::MIN_NODES || n_t < fd::MIN_NODES {
            return Err(GeomError::Resolution(format!(
                "rectangle grid {n_s}x{n_t} is below the stencil width"
            )));
        }
        Ok(Self { bounds: [a, b, c, d], n_s, n_t })
    }

    pub fn bounds(&self) -> [f64; 4] {
        self.bounds
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn h_s(&self) -> f64 {
        (self.bounds[1] - self.bounds[0]) / (self.n_s - 1) as f64
    }

    pub fn h_t(&self) -> f64 {
        (self.bounds[3] - self.bounds[2]) / (self.n_t - 1) as f64
    }

    pub fn s(&self, i: usize) -> f64 {
        self.bounds[0] + i as f64 * self.h_s()
    }

    pub fn t(&self, j: usize) -> f64 {
        self.bounds[2] + j as f64 * self.h_t()
    }
}

/// Flat torus ℝ²/(L_x ℤ × L_y ℤ) with uniform nodes.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    periods: [f64; 2],
    ax: SpectralAxis,
    ay: SpectralAxis,
}

impl TorusGrid {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0) {
            return Err(invalid("torus periods must be positive"));
        }
        for n in [nx, ny] {
            if n < 8 || n % 2 != 0 {
                return Err(invalid(format!("torus sizes must be even and >= 8, got {n}")));
            }
        }
        Ok(Self { periods: [lx, ly], ax: SpectralAxis::new(nx, lx), ay: SpectralAxis::new(ny, ly) })
    }

    pub fn periods(&self) -> [f64; 2] {
        self.periods
    }

    pub fn nx(&self) -> usize {
        self.ax.len()
    }

    pub fn ny(&self) -> usize {
        self.ay.len()
    }

    pub fn axes(&self) -> (&SpectralAxis, &SpectralAxis) {
        (&self.ax, &self.ay)
    }
}

/// Coordinates of one node.
#[derive(Debug, Clone, Copy)]
pub struct NodePoint {
    pub index: usize,
    /// Grid-native coordinates: θ, (ρ,θ), (s,t) or (x,y).
    pub native: [f64; 2],
    /// Planar position; for the circle this is the point on S¹.
    pub cart: [f64; 2],
}

#[derive(Debug, Clone)]
pub enum Grid {
    Circle(CircleGrid),
    Annulus(AnnulusGrid),
    Rect(RectGrid),
    Torus(TorusGrid),
}

impl From<CircleGrid> for Grid {
    fn from(g: CircleGrid) -> Self {
        Grid::Circle(g)
    }
}

impl From<AnnulusGrid> for Grid {
    fn from(g: AnnulusGrid) -> Self {
        Grid::Annulus(g)
    }
}

impl From<RectGrid> for Grid {
    fn from(g: RectGrid) -> Self {
        Grid::Rect(g)
    }
}

impl From<TorusGrid> for Grid {
    fn from(g: TorusGrid) -> Self {
        Grid::Torus(g)
    }
}

impl Grid {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Grid::Circle(g) => (g.n, 1),
            Grid::Annulus(g) => (g.n_rho, g.n_theta),
            Grid::Rect(g) => (g.n_s, g.n_t),
            Grid::Torus(g) => (g.nx(), g.ny()),
        }
    }

    pub fn node_count(&self) -> usize {
        let (a, b) = self.shape();
        a * b
    }

    pub fn n_axes(&self) -> usize {
        match self {
            Grid::Circle(_) => 1,
            _ => 2,
        }
    }

    pub fn axis_kind(&self, axis: usize) -> Result<AxisKind> {
        match (self, axis) {
            (Grid::Circle(_), 0) => Ok(AxisKind::Periodic),
            (Grid::Annulus(_), 0) => Ok(AxisKind::Bounded),
            (Grid::Annulus(_), 1) => Ok(AxisKind::Periodic),
            (Grid::Rect(_), 0 | 1) => Ok(AxisKind::Bounded),
            (Grid::Torus(_), 0 | 1) => Ok(AxisKind::Periodic),
            _ => Err(invalid(format!("axis {axis} out of range"))),
        }
    }

    pub fn node(&self, index: usize) -> NodePoint {
        let (_, n1) = self.shape();
        let (i, j) = (index / n1, index % n1);
        let (native, cart) = match self {
            Grid::Circle(g) => {
                let t = g.theta(i);
                ([t, 0.0], [t.cos(), t.sin()])
            }
            Grid::Annulus(g) => {
                let (r, t) = (g.rho(i), g.theta(j));
                ([r, t], [r * t.cos(), r * t.sin()])
            }
            Grid::Rect(g) => {
                let p = [g.s(i), g.t(j)];
                (p, p)
            }
            Grid::Torus(g) => {
                let p = [
                    i as f64 * g.periods[0] / g.nx() as f64,
                    j as f64 * g.periods[1] / g.ny() as f64,
                ];
                (p, p)
            }
        };
        NodePoint { index, native, cart }
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodePoint> + '_ {
        (0..self.node_count()).map(move |k| self.node(k))
    }

    pub fn weight(&self, index: usize) -> f64 {
        let (_, n1) = self.shape();
        let (i, j) = (index / n1, index % n1);
        match self {
            Grid::Circle(g) => g.weight(),
            Grid::Annulus(g) => g.rho(i) * g.d_rho() * g.d_theta(),
            Grid::Rect(g) => {
                let ws = if i == 0 || i == g.n_s - 1 { 0.5 } else { 1.0 };
                let wt = if j == 0 || j == g.n_t - 1 { 0.5 } else { 1.0 };
                ws * wt * g.h_s() * g.h_t()
            }
            Grid::Torus(g) => {
                g.periods[0] * g.periods[1] / (g.nx() * g.ny()) as f64
            }
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.node_count()).map(|k| self.weight(k)).collect()
    }

    /// Total measure of the domain.
    pub fn measure(&self) -> f64 {
        match self {
            Grid::Circle(_) => 2.0 * PI,
            Grid::Annulus(g) => PI * (g.outer * g.outer - g.inner * g.inner),
            Grid::Rect(g) => (g.bounds[1] - g.bounds[0]) * (g.bounds[3] - g.bounds[2]),
            Grid::Torus(g) => g.periods[0] * g.periods[1],
        }
    }

    /// Σ w_i f_i for one scalar per node.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.node_count() {
            return Err(invalid(format!(
                "expected {} values, got {}",
                self.node_count(),
                values.len()
            )));
        }
        let mut acc = 0.0;
        for (k, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(GeomError::Numeric { node: k, msg: format!("value {v}") });
            }
            acc += self.weight(k) * v;
        }
        Ok(acc)
    }

    /// L^p norm of a nonnegative pointwise magnitude; `p = ∞` gives the max.
    pub fn lp(&self, magnitudes: &[f64], p: f64) -> f64 {
        self.lp_masked(magnitudes, p, |_| true)
    }

    /// L^p norm restricted to the nodes selected by `keep`.
    pub fn lp_masked(&self, magnitudes: &[f64], p: f64, keep: impl Fn(usize) -> bool) -> f64 {
        if p.is_infinite() {
            return magnitudes
                .iter()
                .enumerate()
                .filter(|(k, _)| keep(*k))
                .fold(0.0, |m, (_, &v)| m.max(v));
        }
        let s: f64 = magnitudes
            .iter()
            .enumerate()
            .filter(|(k, _)| keep(*k))
            .map(|(k, &v)| self.weight(k) * v.powf(p))
            .sum();
        s.powf(1.0 / p)
    }

    fn differentiate_raw(&self, values: &[f64], dim: usize, axis: usize) -> Result<Vec<f64>> {
        let kind = self.axis_kind(axis)?;
        let (n0, n1) = self.shape();
        let (len, lines, stride_line, stride_node) = if axis == 0 {
            (n0, n1, 1, n1)
        } else {
            (n1, n0, n1, 1)
        };
        let mut out = vec![0.0; values.len()];
        let mut line = vec![0.0; len];
        let mut dline = vec![0.0; len];
        for l in 0..lines {
            for c in 0..dim {
                for m in 0..len {
                    line[m] = values[(l * stride_line + m * stride_node) * dim + c];
                }
                match kind {
                    AxisKind::Periodic => self.spectral_axis(axis).derivative(&line, &mut dline),
                    AxisKind::Bounded => fd::derivative(&line, self.spacing(axis), &mut dline)?,
                }
                for m in 0..len {
                    out[(l * stride_line + m * stride_node) * dim + c] = dline[m];
                }
            }
        }
        Ok(out)
    }

    fn spectral_axis(&self, axis: usize) -> &SpectralAxis {
        match (self, axis) {
            (Grid::Circle(g), _) => &g.axis,
            (Grid::Annulus(g), _) => &g.axis,
            (Grid::Torus(g), 0) => &g.ax,
            (Grid::Torus(g), _) => &g.ay,
            (Grid::Rect(_), _) => unreachable!("rectangle axes are bounded"),
        }
    }

    fn spacing(&self, axis: usize) -> f64 {
        match (self, axis) {
            (Grid::Annulus(g), 0) => g.d_rho(),
            (Grid::Rect(g), 0) => g.h_s(),
            (Grid::Rect(g), _) => g.h_t(),
            _ => unreachable!("periodic axes have no stencil spacing"),
        }
    }
}

/// Vector-valued samples on a grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    dim: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() != grid.node_count() * dim {
            return Err(invalid(format!(
                "values length {} does not match {} nodes x dim {dim}",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn zeros(grid: Arc<Grid>, dim: usize) -> Self {
        let n = grid.node_count() * dim;
        Self { grid, dim, values: vec![0.0; n] }
    }

    /// Evaluates `f` at every node.
    pub fn sample(grid: Arc<Grid>, dim: usize, mut f: impl FnMut(&NodePoint, &mut [f64])) -> Self {
        let mut values = vec![0.0; grid.node_count() * dim];
        for (node, chunk) in grid.nodes().zip(values.chunks_mut(dim)) {
            f(&node, chunk);
        }
        Self { grid, dim, values }
    }

    /// Samples a ℂ^k-valued function, interleaving real and imaginary parts.
    pub fn sample_complex(
        grid: Arc<Grid>,
        k: usize,
        f: impl Fn(&NodePoint, &mut [Complex64]),
    ) -> Self {
        let mut buf = vec![Complex64::new(0.0, 0.0); k];
        Self::sample(grid, 2 * k, |node, out| {
            f(node, &mut buf);
            for (i, z) in buf.iter().enumerate() {
                out[2 * i] = z.re;
                out[2 * i + 1] = z.im;
            }
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, node: usize) -> &[f64] {
        &self.values[node * self.dim..(node + 1) * self.dim]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), dim: self.dim, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid.clone(), dim: self.dim, values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || !Arc::ptr_eq(&self.grid, &other.grid) {
            return Err(invalid("grid functions live on different grids or dimensions"));
        }
        Ok(())
    }

    /// Partial derivative along a grid axis.
    pub fn differentiate(&self, axis: usize) -> Result<Self> {
        let values = self.grid.differentiate_raw(&self.values, self.dim, axis)?;
        Ok(Self { grid: self.grid.clone(), dim: self.dim, values })
    }

    /// Planar partials (∂_x, ∂_y). On the circle both entries are ∂_θ.
    pub fn cartesian_gradient(&self) -> Result<(Self, Self)> {
        match &*self.grid {
            Grid::Circle(_) => {
                let d = self.differentiate(0)?;
                Ok((d.clone(), d))
            }
            Grid::Annulus(g) => {
                let dr = self.differentiate(0)?;
                let dt = self.differentiate(1)?;
                let mut fx = Self::zeros(self.grid.clone(), self.dim);
                let mut fy = Self::zeros(self.grid.clone(), self.dim);
                let n1 = g.n_theta;
                for k in 0..self.grid.node_count() {
                    let (rho, th) = (g.rho(k / n1), g.theta(k % n1));
                    let (s, c) = th.sin_cos();
                    for d in 0..self.dim {
                        let i = k * self.dim + d;
                        fx.values[i] = c * dr.values[i] - s / rho * dt.values[i];
                        fy.values[i] = s * dr.values[i] + c / rho * dt.values[i];
                    }
                }
                Ok((fx, fy))
            }
            Grid::Rect(_) | Grid::Torus(_) => Ok((self.differentiate(0)?, self.differentiate(1)?)),
        }
    }

    /// Euclidean norm of the value at each node.
    pub fn pointwise_norm(&self) -> Vec<f64> {
        self.values.chunks(self.dim).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect()
    }

    /// |df| per node: Frobenius norm over components and orthonormal directions.
    pub fn gradient_norm(&self) -> Result<Vec<f64>> {
        if let Grid::Circle(_) = &*self.grid {
            return Ok(self.differentiate(0)?.pointwise_norm());
        }
        let (fx, fy) = self.cartesian_gradient()?;
        Ok(fx
            .pointwise_norm()
            .iter()
            .zip(fy.pointwise_norm())
            .map(|(a, b)| a.hypot(b))
            .collect())
    }

    /// Quadrature of a scalar function.
    pub fn quadrature(&self) -> Result<f64> {
        if self.dim != 1 {
            return Err(invalid("quadrature expects a scalar grid function"));
        }
        self.grid.integrate(&self.values)
    }

    /// Quadrature of each component.
    pub fn integrate_components(&self) -> Result<Vec<f64>> {
        (0..self.dim)
            .map(|c| {
                let comp: Vec<f64> = self.values.iter().skip(c).step_by(self.dim).copied().collect();
                self.grid.integrate(&comp)
            })
            .collect()
    }

    /// Componentwise quadrature mean.
    pub fn mean(&self) -> Result<Vec<f64>> {
        let m = self.grid.measure();
        Ok(self.integrate_components()?.into_iter().map(|v| v / m).collect())
    }

    /// Copy with the quadrature mean removed from every component.
    pub fn mean_free(&self) -> Result<Self> {
        let mean = self.mean()?;
        let mut out = self.clone();
        for chunk in out.values.chunks_mut(self.dim) {
            for (v, m) in chunk.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        Ok(out)
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.grid.lp(&self.pointwise_norm(), p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_rejects_odd() {
        assert!(CircleGrid::new(9).is_err());
        assert!(CircleGrid::new(6).is_err());
    }

    #[test]
    fn annulus_rejects_inverted_radii() {
        assert!(AnnulusGrid::new(0.5, 1.0, 16, 16).is_err());
    }

    #[test]
    fn axis_out_of_range() {
        let g = Arc::new(Grid::from(CircleGrid::new(16).unwrap()));
        let f = GridFunction::zeros(g, 1);
        assert!(matches!(f.differentiate(1), Err(GeomError::InvalidArgument(_))));
    }

    #[test]
    fn nonfinite_reports_node() {
        let g = Grid::from(CircleGrid::new(8).unwrap());
        let mut v = vec![0.0; 8];
        v[5] = f64::NAN;
        assert!(matches!(g.integrate(&v), Err(GeomError::Numeric { node: 5, .. })));
    }
}
