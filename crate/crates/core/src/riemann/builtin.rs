use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::metric::{ChartBox, MetricField};

/// Standard metric δ on ℝⁿ.
#[derive(Debug, Clone)]
pub struct Euclidean {
    pub dim: usize,
    pub half_width: f64,
}

impl Euclidean {
    pub fn new(dim: usize) -> Self {
        Self { dim, half_width: 10.0 }
    }
}

impl MetricField for Euclidean {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim)
    }

    fn derivative(&self, _x: &[f64], _i: usize) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(self.dim, self.dim))
    }

    fn chart(&self) -> ChartBox {
        ChartBox::cube(self.dim, self.half_width)
    }
}

/// Unit sphere in polar coordinates (θ, φ): g = diag(1, sin²θ).
///
/// The chart keeps θ at least 0.05 away from both poles.
#[derive(Debug, Clone, Copy, Default)]
pub struct RoundSphere;

impl RoundSphere {
    pub const POLE_MARGIN: f64 = 0.05;
}

impl MetricField for RoundSphere {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let s = x[0].sin();
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, s * s])
    }

    fn derivative(&self, x: &[f64], i: usize) -> Option<DMatrix<f64>> {
        let d = if i == 0 { (2.0 * x[0]).sin() } else { 0.0 };
        Some(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, d]))
    }

    fn chart(&self) -> ChartBox {
        ChartBox {
            lo: vec![Self::POLE_MARGIN, -PI],
            hi: vec![PI - Self::POLE_MARGIN, 3.0 * PI],
        }
    }
}

/// Unit sphere in stereographic coordinates from the south pole:
/// g = 4/(1+|x|²)² δ.
#[derive(Debug, Clone, Copy, Default)]
pub struct StereographicSphere;

impl StereographicSphere {
    /// Chart coordinates of a point on the unit sphere (z ≠ −1).
    pub fn project(p: [f64; 3]) -> [f64; 2] {
        [p[0] / (1.0 + p[2]), p[1] / (1.0 + p[2])]
    }
}

impl MetricField for StereographicSphere {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let c = 4.0 / (1.0 + x[0] * x[0] + x[1] * x[1]).powi(2);
        DMatrix::from_diagonal_element(2, 2, c)
    }

    fn derivative(&self, x: &[f64], i: usize) -> Option<DMatrix<f64>> {
        let q = 1.0 + x[0] * x[0] + x[1] * x[1];
        Some(DMatrix::from_diagonal_element(2, 2, -16.0 * x[i] / q.powi(3)))
    }

    fn chart(&self) -> ChartBox {
        ChartBox::cube(2, 4.0)
    }
}

/// Upper half-plane with g = diag(1/y², 1/y²).
#[derive(Debug, Clone, Copy, Default)]
pub struct HyperbolicHalfPlane;

impl MetricField for HyperbolicHalfPlane {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal_element(2, 2, 1.0 / (x[1] * x[1]))
    }

    fn derivative(&self, x: &[f64], i: usize) -> Option<DMatrix<f64>> {
        let d = if i == 1 { -2.0 / x[1].powi(3) } else { 0.0 };
        Some(DMatrix::from_diagonal_element(2, 2, d))
    }

    fn chart(&self) -> ChartBox {
        ChartBox { lo: vec![-10.0, 0.05], hi: vec![10.0, 10.0] }
    }
}

/// Flat metric on ℝ²/(L_x ℤ × L_y ℤ), charted over three periods per axis.
#[derive(Debug, Clone, Copy)]
pub struct FlatTorus {
    pub periods: [f64; 2],
}

impl MetricField for FlatTorus {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2, 2)
    }

    fn derivative(&self, _x: &[f64], _i: usize) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(2, 2))
    }

    fn chart(&self) -> ChartBox {
        ChartBox {
            lo: vec![-self.periods[0], -self.periods[1]],
            hi: vec![2.0 * self.periods[0], 2.0 * self.periods[1]],
        }
    }
}
