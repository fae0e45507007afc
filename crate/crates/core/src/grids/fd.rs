//! Fourth-order finite differences on a uniform bounded axis.

use crate::error::{GeomError, Result};

pub const MIN_NODES: usize = 5;

/// Writes the derivative of `f` (uniform spacing `h`) into `out`.
///
/// Centered five-point stencil in the interior, one-sided fourth-order
/// closures on the two nodes nearest each end.
pub fn derivative(f: &[f64], h: f64, out: &mut [f64]) -> Result<()> {
    let n = f.len();
    if n < MIN_NODES {
        return Err(GeomError::Resolution(format!(
            "bounded axis has {n} nodes, stencil needs {MIN_NODES}"
        )));
    }
    let s = 1.0 / (12.0 * h);
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * s;
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * s;
    for i in 2..n - 2 {
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * s;
    }
    let m = n - 1;
    out[m] = (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3] + 3.0 * f[m - 4]) * s;
    out[m - 1] = (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] - f[m - 4]) * s;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_is_exact() {
        let h = 0.1;
        let xs: Vec<f64> = (0..9).map(|i| 0.3 + i as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|x| x.powi(4) - 2.0 * x * x + x).collect();
        let mut d = vec![0.0; f.len()];
        derivative(&f, h, &mut d).unwrap();
        for (x, di) in xs.iter().zip(&d) {
            assert!((di - (4.0 * x.powi(3) - 4.0 * x + 1.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn too_short_axis() {
        let mut d = vec![0.0; 4];
        assert!(matches!(
            derivative(&[1.0; 4], 0.1, &mut d),
            Err(GeomError::Resolution(_))
        ));
    }
}
