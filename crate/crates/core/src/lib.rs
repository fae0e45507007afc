//! Numerical differential geometry on structured grids.
//!
//! Connections and curvature on coordinate charts, parallel transport and
//! exponential-like maps, ∂̄-operators and Nijenhuis tensors, and discrete
//! Sobolev / elliptic estimates evaluated as [`sobolev::InequalityRecord`]s.

pub mod complexlin;
pub mod elliptic;
pub mod error;
pub mod grids;
pub mod linalg;
pub mod riemann;
pub mod sobolev;
pub mod transport;

pub use error::{GeomError, Result};
