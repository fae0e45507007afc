//! Periodic differentiation through the discrete Fourier transform.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct SpectralAxis {
    n: usize,
    period: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralAxis")
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl SpectralAxis {
    pub fn new(n: usize, period: f64) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            period,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Signed wavenumber of DFT bin `k`, zero for the Nyquist bin.
    pub fn wavenumber(&self, k: usize) -> f64 {
        let n = self.n;
        let m = if 2 * k == n {
            0.0
        } else if 2 * k < n {
            k as f64
        } else {
            k as f64 - n as f64
        };
        2.0 * PI * m / self.period
    }

    /// Derivative of real samples `f` written into `out`.
    pub fn derivative(&self, f: &[f64], out: &mut [f64]) {
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for (k, c) in buf.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, self.wavenumber(k) * scale);
        }
        self.inverse.process(&mut buf);
        for (o, c) in out.iter_mut().zip(&buf) {
            *o = c.re;
        }
    }

    /// Normalized DFT coefficients c_k with f_j = Σ c_k e^{2πijk/n}.
    pub fn coefficients(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut buf = f.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }
}
