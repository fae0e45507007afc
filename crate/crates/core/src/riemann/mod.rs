//! Metrics, connections, torsion and curvature on coordinate charts.
//!
//! A connection on the tangent bundle is stored as Christoffel coefficients
//! Γ^k_ij; a connection on an arbitrary frame bundle as a matrix-valued
//! one-form θ with θ(v)^k_l = Σ_i Γ^k_il v^i in the tangent case.

mod builtin;
mod connection;
mod metric;

pub use builtin::{Euclidean, FlatTorus, HyperbolicHalfPlane, RoundSphere, StereographicSphere};
pub use connection::{
    christoffel, connection_difference, covariant_derivative, curvature, form_curvature,
    horizontal_splitting,
    metric_compat_residual, sectional_curvature, torsion, Christoffel, ConnectionCoeffs,
    ConnectionForm, FiberMetric, Provenance,
};
pub use metric::{metric_derivative, ChartBox, MetricField};

use nalgebra::{ComplexField, DVector};

/// Directional derivative of a vector-valued map by centered differences
/// with one Richardson step.
pub fn directional_derivative<T>(
    f: impl Fn(&[f64]) -> DVector<T>,
    x: &[f64],
    v: &[f64],
    h: f64,
) -> DVector<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let shifted = |s: f64| -> Vec<f64> { x.iter().zip(v).map(|(a, b)| a + s * b).collect() };
    let central = |h: f64| -> DVector<T> {
        (f(&shifted(h)) - f(&shifted(-h))) * T::from_real(0.5 / h)
    };
    let coarse = central(h);
    let fine = central(0.5 * h);
    (fine * T::from_real(4.0) - coarse) * T::from_real(1.0 / 3.0)
}
