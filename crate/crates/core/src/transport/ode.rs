//! Dormand–Prince 5(4) integrator.

use crate::error::{GeomError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Upper bound on |h|.
    pub h_max: f64,
    pub max_steps: usize,
    /// Take exactly this many equal steps without error control.
    pub fixed_steps: Option<usize>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { atol: 1e-10, rtol: 1e-9, h_max: f64::INFINITY, max_steps: 200_000, fixed_steps: None }
    }
}

impl OdeOptions {
    pub fn fixed(steps: usize) -> Self {
        Self { fixed_steps: Some(steps), ..Self::default() }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Stepper {
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Self { k: vec![vec![0.0; n]; 7], tmp: vec![0.0; n] }
    }

    /// One step; writes the 5th-order solution to `out` and returns the
    /// embedded error estimate vector in `err`.
    fn step<F>(&mut self, f: &mut F, t: f64, y: &[f64], h: f64, out: &mut [f64], err: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        for s in 0..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (r, a) in A[s].iter().enumerate().take(s) {
                    acc += h * a * self.k[r][i];
                }
                self.tmp[i] = acc;
            }
            f(t + C[s] * h, &self.tmp, &mut self.k[s])?;
        }
        for i in 0..n {
            let mut hi = y[i];
            let mut e = 0.0;
            for s in 0..7 {
                hi += h * B5[s] * self.k[s][i];
                e += h * (B5[s] - B4[s]) * self.k[s][i];
            }
            out[i] = hi;
            err[i] = e;
        }
        Ok(())
    }
}

/// Integrates y' = f(t, y) from `t0` to `t1` (either direction).
///
/// `check` is called on every accepted state and may abort the integration.
pub fn integrate<F, K>(mut f: F, t0: f64, t1: f64, y0: &[f64], opts: &OdeOptions, mut check: K) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    K: FnMut(f64, &[f64]) -> Result<()>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut next = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut st = Stepper::new(n);
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y);
    }
    let dir = span.signum();

    if let Some(steps) = opts.fixed_steps {
        let h = span / steps.max(1) as f64;
        for s in 0..steps.max(1) {
            let t = t0 + s as f64 * h;
            st.step(&mut f, t, &y, h, &mut next, &mut err)?;
            std::mem::swap(&mut y, &mut next);
            check(t + h, &y)?;
        }
        return Ok(y);
    }

    let mut t = t0;
    let mut h = (span.abs() / 16.0).min(opts.h_max) * dir;
    for _ in 0..opts.max_steps {
        if (t1 - t) * dir <= 0.0 {
            return Ok(y);
        }
        if (t + h * (1.0 + 1e-6) - t1) * dir > 0.0 {
            h = t1 - t;
        }
        st.step(&mut f, t, &y, h, &mut next, &mut err)?;
        let mut acc = 0.0;
        for i in 0..n {
            let sc = opts.atol + opts.rtol * y[i].abs().max(next[i].abs());
            acc += (err[i] / sc).powi(2);
        }
        let e = (acc / n as f64).sqrt();
        if !e.is_finite() {
            return Err(GeomError::Integration(format!("non-finite error estimate at t = {t}")));
        }
        if e <= 1.0 {
            let last = (t + h - t1) * dir >= 0.0;
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut next);
            check(t, &y)?;
            if last {
                return Ok(y);
            }
        }
        let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h.abs() * factor).min(opts.h_max) * dir;
        if h.abs() < 1e-14 * span.abs() {
            return Err(GeomError::Integration(format!("step size underflow at t = {t}")));
        }
    }
    Err(GeomError::Integration(format!("tolerance not met within {} steps", opts.max_steps)))
}
