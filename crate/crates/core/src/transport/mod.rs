//! Geodesics, exponential-like maps, parallel transport and holonomy.
//!
//! Transport matrices solve Π′ = −θ(x′)Π with Π(a) = I, so a fiber vector
//! v0 at x(a) is carried to Π v0 at x(b).

mod exp;
mod expansion;
mod holonomy;
pub mod ode;
mod path;

pub use exp::{exp_map, ExpLikeMap, FIXED_STEPS};
pub use expansion::{phi_expansion, phi_lipschitz_check, transport_derivative_defect, Estimate, PhiExpansion};
pub use holonomy::{
    boundary_transport, curvature_norm, loop_holonomy_bound, parallel_transport, rectangle_holonomy,
    transport_matrix, HolonomyResult, MetricBundle, Orientation, SurfaceMap,
};
pub use path::PathCurve;
