use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::ode::{integrate, OdeOptions};
use crate::error::{invalid, GeomError, Result};
use crate::linalg::{flatten, g_norm, unflatten};
use crate::riemann::{ChartBox, ConnectionCoeffs, ConnectionForm, MetricField};

/// Steps used when exp is differentiated by difference quotients.
pub const FIXED_STEPS: usize = 200;

/// Quintic smoothstep 10τ³ − 15τ⁴ + 6τ⁵ on [0, 1].
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// exp(x, v) = γ(1) where γ is the geodesic of a connection with
/// γ(0) = x, γ′(0) = η(v)v, and η is a radial cutoff.
#[derive(Clone)]
pub struct ExpLikeMap {
    conn: ConnectionCoeffs,
    chart: ChartBox,
    metric: Option<Arc<dyn MetricField>>,
    plateau: f64,
    support: f64,
    opts: OdeOptions,
}

impl fmt::Debug for ExpLikeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExpLikeMap")
            .field("conn", &self.conn)
            .field("chart", &self.chart)
            .field("plateau", &self.plateau)
            .field("support", &self.support)
            .finish()
    }
}

impl ExpLikeMap {
    /// Cutoff radii 0.4 and 0.8 times the chart margin; |v| is Euclidean
    /// in chart coordinates.
    pub fn new(conn: ConnectionCoeffs, chart: ChartBox) -> Result<Self> {
        if conn.dim() != chart.dim() {
            return Err(invalid("connection and chart dimensions differ"));
        }
        let m = chart.margin();
        Ok(Self { conn, chart, metric: None, plateau: 0.4 * m, support: 0.8 * m, opts: OdeOptions::default() })
    }

    /// Levi-Civita geodesics with |v| measured by g.
    pub fn riemannian(metric: Arc<dyn MetricField>) -> Self {
        let conn = ConnectionCoeffs::levi_civita(metric.clone());
        let chart = metric.chart();
        let m = chart.margin();
        Self { conn, chart, metric: Some(metric), plateau: 0.4 * m, support: 0.8 * m, opts: OdeOptions::default() }
    }

    pub fn with_metric(mut self, metric: Arc<dyn MetricField>) -> Self {
        self.metric = Some(metric);
        self
    }

    pub fn with_radii(mut self, plateau: f64, support: f64) -> Result<Self> {
        if !(0.0 < plateau && plateau < support) {
            return Err(invalid("cutoff radii need 0 < plateau < support"));
        }
        self.plateau = plateau;
        self.support = support;
        Ok(self)
    }

    pub fn with_options(mut self, opts: OdeOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn connection(&self) -> &ConnectionCoeffs {
        &self.conn
    }

    pub fn chart(&self) -> &ChartBox {
        &self.chart
    }

    pub fn metric(&self) -> Option<&Arc<dyn MetricField>> {
        self.metric.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.conn.dim()
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    /// |v| at x, using g when present.
    pub fn norm(&self, x: &[f64], v: &[f64]) -> f64 {
        let v = DVector::from_column_slice(v);
        match &self.metric {
            Some(g) => g_norm(&v, &g.eval(x)),
            None => v.norm(),
        }
    }

    /// η(v): 1 on the plateau, 0 beyond the support radius.
    pub fn cutoff(&self, x: &[f64], v: &[f64]) -> f64 {
        let r = self.norm(x, v);
        1.0 - smoothstep((r - self.plateau) / (self.support - self.plateau))
    }

    pub fn in_plateau(&self, x: &[f64], v: &[f64]) -> bool {
        self.norm(x, v) < self.plateau
    }

    fn check_args(&self, x: &[f64], v: &[f64]) -> Result<()> {
        let n = self.dim();
        if x.len() != n || v.len() != n {
            return Err(invalid(format!("exp expects {n}-dimensional point and vector")));
        }
        if !self.chart.contains(x) {
            return Err(GeomError::DomainEscape { time: 0.0, point: x.to_vec() });
        }
        Ok(())
    }

    /// Geodesic flow over t ∈ [0, 1] from (x, η(v)v). When `theta` is
    /// given, also integrates the transport matrix Π′ = −θ(γ′)Π along it.
    fn flow(
        &self,
        x: &[f64],
        v: &[f64],
        theta: Option<&ConnectionForm<f64>>,
        opts: &OdeOptions,
    ) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
        self.check_args(x, v)?;
        let n = self.dim();
        let eta = self.cutoff(x, v);
        if eta == 0.0 || v.iter().all(|c| *c == 0.0) {
            let rank = theta.map(|t| t.rank());
            return Ok((x.to_vec(), rank.map(|k| DMatrix::identity(k, k))));
        }
        let k = theta.map_or(0, |t| t.rank());
        let mut y0 = Vec::with_capacity(2 * n + k * k);
        y0.extend_from_slice(x);
        y0.extend(v.iter().map(|c| eta * c));
        if k > 0 {
            y0.extend(flatten(&DMatrix::<f64>::identity(k, k)));
        }
        let conn = &self.conn;
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            let (pos, vel) = (&y[..n], &y[n..2 * n]);
            let acc = conn.at(pos)?.apply(vel, vel);
            dy[..n].copy_from_slice(vel);
            for i in 0..n {
                dy[n + i] = -acc[i];
            }
            if let Some(th) = theta {
                let pi = unflatten::<f64>(k, k, &y[2 * n..]);
                let d = -(th.at(pos, vel)? * pi);
                dy[2 * n..].copy_from_slice(d.as_slice());
            }
            Ok(())
        };
        let chart = &self.chart;
        let check = |t: f64, y: &[f64]| -> Result<()> {
            if y.iter().any(|c| !c.is_finite()) {
                return Err(GeomError::Integration(format!("non-finite geodesic state at t = {t}")));
            }
            if !chart.contains(&y[..n]) {
                return Err(GeomError::DomainEscape { time: t, point: y[..n].to_vec() });
            }
            Ok(())
        };
        let y = integrate(rhs, 0.0, 1.0, &y0, opts, check)?;
        let pi = (k > 0).then(|| unflatten::<f64>(k, k, &y[2 * n..]));
        Ok((y[..n].to_vec(), pi))
    }

    /// Adaptive integration at the map's tolerance.
    pub fn exp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.flow(x, v, None, &self.opts)?.0)
    }

    /// Fixed-step integration, smooth in (x, v); used under difference quotients.
    pub fn exp_fixed(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.flow(x, v, None, &OdeOptions::fixed(FIXED_STEPS))?.0)
    }

    /// exp(x, v) together with the transport matrix of `theta` along the ray
    /// s ↦ exp(x, sv), s ∈ [0, 1].
    pub fn ray_transport(&self, theta: &ConnectionForm<f64>, x: &[f64], v: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let (p, pi) = self.flow(x, v, Some(theta), &self.opts)?;
        Ok((p, pi.expect("transport requested")))
    }

    /// Fixed-step variant of [`Self::ray_transport`].
    pub fn ray_transport_fixed(
        &self,
        theta: &ConnectionForm<f64>,
        x: &[f64],
        v: &[f64],
    ) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let (p, pi) = self.flow(x, v, Some(theta), &OdeOptions::fixed(FIXED_STEPS))?;
        Ok((p, pi.expect("transport requested")))
    }

    /// d/ds exp(x + s·dx, v + s·dv) at s = 0.
    pub fn differential(&self, x: &[f64], v: &[f64], dx: &[f64], dv: &[f64]) -> Result<DVector<f64>> {
        let scale = dx.iter().chain(dv).fold(1.0f64, |m, c| m.max(c.abs()));
        let h = 1e-3 / scale;
        let at = |s: f64| -> Result<DVector<f64>> {
            let y: Vec<f64> = x.iter().zip(dx).map(|(a, b)| a + s * b).collect();
            let w: Vec<f64> = v.iter().zip(dv).map(|(a, b)| a + s * b).collect();
            Ok(DVector::from_vec(self.exp_fixed(&y, &w)?))
        };
        central_richardson(at, h)
    }
}

/// exp(x, v) for the given exponential-like map.
pub fn exp_map(e: &ExpLikeMap, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    e.exp(x, v)
}

/// Centered difference at 0 with one Richardson step.
pub(crate) fn central_richardson<T>(f: impl Fn(f64) -> Result<T>, h: f64) -> Result<T>
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let coarse = (f(h)? - f(-h)?) * (0.5 / h);
    let fine = (f(0.5 * h)? - f(-0.5 * h)?) * (1.0 / h);
    Ok((fine * 4.0 - coarse) * (1.0 / 3.0))
}
