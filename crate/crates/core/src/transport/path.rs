use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{invalid, Result};
use crate::linalg::g_norm;
use crate::riemann::MetricField;

type CurveFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// Parametrized curve t ↦ x(t) in chart coordinates, t ∈ [a, b].
#[derive(Clone)]
pub struct PathCurve {
    a: f64,
    b: f64,
    pos: Arc<CurveFn>,
    vel: Arc<CurveFn>,
    n_steps: usize,
}

impl fmt::Debug for PathCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PathCurve")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("n_steps", &self.n_steps)
            .finish()
    }
}

impl PathCurve {
    pub fn new(
        a: f64,
        b: f64,
        pos: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        vel: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        n_steps: usize,
    ) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(invalid(format!("curve interval [{a}, {b}] is empty or infinite")));
        }
        if n_steps == 0 {
            return Err(invalid("n_steps must be positive"));
        }
        if vel(a).len() != pos(a).len() {
            return Err(invalid("position and velocity dimensions differ"));
        }
        Ok(Self { a, b, pos: Arc::new(pos), vel: Arc::new(vel), n_steps })
    }

    /// Straight segment from `x0` to `x1` on [0, 1].
    pub fn segment(x0: Vec<f64>, x1: Vec<f64>, n_steps: usize) -> Result<Self> {
        if x0.len() != x1.len() {
            return Err(invalid("segment endpoints have different dimensions"));
        }
        let d: Vec<f64> = x1.iter().zip(&x0).map(|(b, a)| b - a).collect();
        let d2 = d.clone();
        Self::new(
            0.0,
            1.0,
            move |t| x0.iter().zip(&d).map(|(a, v)| a + t * v).collect(),
            move |_| d2.clone(),
            n_steps,
        )
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn dim(&self) -> usize {
        (self.pos)(self.a).len()
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// The same curve on [a, t], with steps scaled to the shorter interval.
    pub fn restrict(&self, t: f64) -> Result<Self> {
        if !(t > self.a && t <= self.b) {
            return Err(invalid(format!("restriction end {t} outside ({}, {}]", self.a, self.b)));
        }
        let steps = ((self.n_steps as f64) * (t - self.a) / (self.b - self.a)).ceil().max(1.0) as usize;
        Ok(Self { a: self.a, b: t, pos: self.pos.clone(), vel: self.vel.clone(), n_steps: steps })
    }

    pub fn with_n_steps(mut self, n_steps: usize) -> Self {
        self.n_steps = n_steps.max(1);
        self
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        (self.pos)(t)
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        (self.vel)(t)
    }

    pub fn is_closed(&self) -> bool {
        let (p, q) = (self.point(self.a), self.point(self.b));
        p.iter().zip(&q).all(|(x, y)| (x - y).abs() <= 1e-10)
    }

    /// Same image traversed from x(b) to x(a).
    pub fn reversed(&self) -> Self {
        let (a, b) = (self.a, self.b);
        let pos = self.pos.clone();
        let vel = self.vel.clone();
        Self {
            a,
            b,
            pos: Arc::new(move |t| pos(a + b - t)),
            vel: Arc::new(move |t| vel(a + b - t).into_iter().map(|v| -v).collect()),
            n_steps: self.n_steps,
        }
    }

    /// ∫ |x′|^p dt under g, composite Simpson rule.
    fn speed_integral(&self, g: &dyn MetricField, p: i32) -> f64 {
        let n = 2 * (64 * self.n_steps).max(512);
        let h = (self.b - self.a) / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let t = self.a + i as f64 * h;
            let x = self.point(t);
            let s = g_norm(&DVector::from_vec(self.velocity(t)), &g.eval(&x)).powi(p);
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * s;
        }
        acc * h / 3.0
    }

    /// ‖dα‖₁, the length of the curve.
    pub fn length(&self, g: &dyn MetricField) -> f64 {
        self.speed_integral(g, 1)
    }

    /// ‖dα‖₂² = ∫ |α′|² dt.
    pub fn energy(&self, g: &dyn MetricField) -> f64 {
        self.speed_integral(g, 2)
    }
}
