//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{Cholesky, ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GeomError, Result};

/// Scalars that can be flattened into real ODE state.
pub trait FiberScalar: ComplexField<RealField = f64> + Copy {
    const PARTS: usize;

    fn write_parts(self, out: &mut [f64]);

    fn read_parts(inp: &[f64]) -> Self;
}

impl FiberScalar for f64 {
    const PARTS: usize = 1;

    fn write_parts(self, out: &mut [f64]) {
        out[0] = self;
    }

    fn read_parts(inp: &[f64]) -> Self {
        inp[0]
    }
}

impl FiberScalar for Complex64 {
    const PARTS: usize = 2;

    fn write_parts(self, out: &mut [f64]) {
        out[0] = self.re;
        out[1] = self.im;
    }

    fn read_parts(inp: &[f64]) -> Self {
        Complex64::new(inp[0], inp[1])
    }
}

pub fn flatten<T: FiberScalar>(m: &DMatrix<T>) -> Vec<f64> {
    let mut out = vec![0.0; m.len() * T::PARTS];
    for (z, chunk) in m.iter().zip(out.chunks_mut(T::PARTS)) {
        z.write_parts(chunk);
    }
    out
}

pub fn unflatten<T: FiberScalar>(rows: usize, cols: usize, data: &[f64]) -> DMatrix<T> {
    let vals: Vec<T> = data.chunks(T::PARTS).map(T::read_parts).collect();
    DMatrix::from_column_slice(rows, cols, &vals)
}

/// Largest singular value.
pub fn op_norm<T: FiberScalar>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Lower-triangular L with g = L L^*.
pub fn cholesky_factor<T: FiberScalar>(g: &DMatrix<T>, point: &[f64]) -> Result<DMatrix<T>> {
    Cholesky::new(g.clone())
        .map(|c| c.l())
        .ok_or_else(|| GeomError::DegenerateMetric { point: point.to_vec() })
}

/// Operator norm of an endomorphism with respect to the inner product g.
pub fn g_op_norm<T: FiberScalar>(m: &DMatrix<T>, g: &DMatrix<T>, point: &[f64]) -> Result<f64> {
    let lh = cholesky_factor(g, point)?.adjoint();
    let lh_inv = lh
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::DegenerateMetric { point: point.to_vec() })?;
    Ok(op_norm(&(lh * m * lh_inv)))
}

/// Columns form a g-orthonormal basis.
pub fn orthonormal_frame<T: FiberScalar>(g: &DMatrix<T>, point: &[f64]) -> Result<DMatrix<T>> {
    cholesky_factor(g, point)?
        .adjoint()
        .try_inverse()
        .ok_or_else(|| GeomError::DegenerateMetric { point: point.to_vec() })
}

pub fn g_norm<T: FiberScalar>(v: &DVector<T>, g: &DMatrix<T>) -> f64 {
    (v.adjoint() * g * v)[(0, 0)].real().max(0.0).sqrt()
}

/// Real 2n×2n matrix of a complex n×n matrix acting on interleaved (re, im) pairs.
pub fn realify(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            out[(2 * i, 2 * j)] = z.re;
            out[(2 * i, 2 * j + 1)] = -z.im;
            out[(2 * i + 1, 2 * j)] = z.im;
            out[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    out
}

/// Multiplication by i on ℂⁿ with interleaved real coordinates.
pub fn standard_complex_structure(n: usize) -> DMatrix<f64> {
    realify(&(DMatrix::<Complex64>::identity(n, n) * Complex64::i()))
}

pub fn complex_to_real(v: &DVector<Complex64>) -> DVector<f64> {
    DVector::from_iterator(2 * v.len(), v.iter().flat_map(|z| [z.re, z.im]))
}

pub fn real_to_complex(v: &DVector<f64>) -> DVector<Complex64> {
    DVector::from_iterator(v.len() / 2, v.as_slice().chunks(2).map(|c| Complex64::new(c[0], c[1])))
}
