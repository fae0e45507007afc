//! Almost complex structures and Cauchy–Riemann type operators.
//!
//! The domain is a planar grid with j∂_x = ∂_y. One-forms on the domain are
//! stored by their values on ∂_x and ∂_y; a (0,1)-form η with values in a
//! bundle with complex structure I satisfies η(∂_y) = −I η(∂_x).

mod cr;
mod djs;
mod forms;
mod structure;

pub use cr::{
    admissibility_check, cr_pullback, linearized_dbar, nonlinear_dbar, pullback_covariant,
    AdmissibilityProbe, AdmissibilityReport, CrOperator, NonlinearDbar, SectionNorms, ZerothOrder,
};
pub use djs::{
    d_js_bracket_form, d_js_four_bracket, d_js_operator, dbar_jlinear_corrected, HolomorphicPatch,
    VectorField,
};
pub use forms::{
    bundle_dbar, dbar_compatibility_residual, dbar_map, dbar_symbol, del_map, incompatible_connection_example,
    induced_total_j, rotate, splitting_residual, DbarForm, MapU, OneForm, SectionAlongU,
};
pub use structure::{
    covariant_j, covariant_j_residual, j_linear_connection, lie_bracket, nijenhuis, AlmostComplex,
    BRACKET_STEP,
};
