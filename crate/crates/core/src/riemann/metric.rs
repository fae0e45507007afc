use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// Axis-aligned coordinate box in ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ChartBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(invalid("chart box needs lo < hi in every coordinate"));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(n: usize, half_width: f64) -> Self {
        Self { lo: vec![-half_width; n], hi: vec![half_width; n] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Smallest half-width over the coordinates.
    pub fn margin(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (b - a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

/// Smooth symmetric positive-definite g_ij on a chart.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> DMatrix<f64>;

    /// Analytic ∂_i g when known.
    fn derivative(&self, _x: &[f64], _i: usize) -> Option<DMatrix<f64>> {
        None
    }

    fn chart(&self) -> ChartBox;

    fn fd_step(&self) -> f64 {
        1e-5
    }
}

/// ∂_i g at x: analytic when the metric supplies it, otherwise centered
/// differences, refined by Richardson extrapolation when the metric scale
/// changes by more than 10³ across the stencil.
pub fn metric_derivative(g: &dyn MetricField, x: &[f64], i: usize) -> DMatrix<f64> {
    if let Some(d) = g.derivative(x, i) {
        return d;
    }
    let h = g.fd_step();
    let at = |s: f64| {
        let mut y = x.to_vec();
        y[i] += s;
        g.eval(&y)
    };
    let (plus, minus) = (at(h), at(-h));
    let coarse = (&plus - &minus) / (2.0 * h);
    let (np, nm) = (plus.norm(), minus.norm());
    let spread = np.max(nm) / np.min(nm).max(f64::MIN_POSITIVE);
    if spread <= 1e3 {
        return coarse;
    }
    let fine = (at(0.5 * h) - at(-0.5 * h)) / h;
    (fine * 4.0 - coarse) / 3.0
}
