//! Discrete L^p norms and the Poincaré / Sobolev inequality suite.
//!
//! Every check returns an [`InequalityRecord`]. A bound has the shape
//! `rhs = baseline + C·structural`, where `baseline` carries terms with no
//! unknown constant (zero for most checks), so a fitted constant can be
//! recovered from a record as `(lhs − baseline)/structural`.

mod planar;
mod poincare;
mod sections;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, precondition, Result};
use crate::grids::{Grid, GridFunction};

pub use planar::{
    annulus_mean_zero_l1, c0_embedding, convex_mean_value, l2_from_l1_gradient, oscillation_bound, pq_constant,
    pq_embedding, AnnulusVariant, ConvexMask,
};
pub use poincare::{closed_parallel_section, fourier_poincare, loop_pairing_bound};
pub use sections::{
    c0_recursion_exponents, section_c0_bound, section_pq_embedding, RecursionTrace, SectionMagnitudes, SectionSuite,
};

/// Slack applied to checks with fitted constants.
pub const FITTED_SLACK: f64 = 0.05;

/// Relative tolerance of the mean-zero preconditions.
pub const MEAN_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstantProvenance {
    Paper,
    Fitted,
}

impl fmt::Display for ConstantProvenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstantProvenance::Paper => "paper",
            ConstantProvenance::Fitted => "fitted",
        })
    }
}

/// One evaluated inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityRecord {
    pub lemma_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub params: BTreeMap<String, f64>,
    pub pass: bool,
    pub constant_used: f64,
    pub provenance: ConstantProvenance,
    pub slack: f64,
    /// Constant-free part of the bound.
    pub baseline: f64,
    /// Factor multiplied by the constant.
    pub structural: f64,
}

impl InequalityRecord {
    /// Record for `lhs ≤ baseline + constant·structural`.
    pub fn new(
        lemma_id: impl Into<String>,
        lhs: f64,
        baseline: f64,
        structural: f64,
        constant: f64,
        provenance: ConstantProvenance,
        slack: f64,
    ) -> Self {
        let rhs = baseline + constant * structural;
        let mut rec = Self {
            lemma_id: lemma_id.into(),
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            params: BTreeMap::new(),
            pass: false,
            constant_used: constant,
            provenance,
            slack,
            baseline,
            structural,
        };
        rec.pass = rec.judge(slack);
        rec
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// lhs ≤ rhs·(1 + slack); NaN never passes.
    pub fn judge(&self, slack: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + slack)
    }

    /// The same record judged with another slack.
    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self.pass = self.judge(slack);
        self
    }

    /// The same measurement against another constant.
    pub fn with_constant(self, constant: f64, provenance: ConstantProvenance) -> Self {
        let params = self.params.clone();
        let mut rec = Self::new(self.lemma_id, self.lhs, self.baseline, self.structural, constant, provenance, self.slack);
        rec.params = params;
        rec
    }

    /// Smallest constant that makes this record an equality:
    /// max(0, lhs − baseline)/structural.
    pub fn fitted_constant(&self) -> f64 {
        ratio((self.lhs - self.baseline).max(0.0), self.structural)
    }
}

/// lhs/rhs with 0/0 = 0 and x/0 = ∞.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Quadrature-backed norms on one grid with a fixed exponent p.
#[derive(Debug, Clone)]
pub struct NormSuite {
    grid: Arc<Grid>,
    p: f64,
}

impl NormSuite {
    pub fn new(grid: Arc<Grid>, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(invalid(format!("norm exponent must be >= 1, got {p}")));
        }
        Ok(Self { grid, p })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if !Arc::ptr_eq(f.grid(), &self.grid) {
            return Err(invalid("function lives on another grid"));
        }
        Ok(())
    }

    /// ‖f‖_q for any q, ∞ included.
    pub fn norm(&self, f: &GridFunction, q: f64) -> Result<f64> {
        self.check(f)?;
        Ok(f.lp_norm(q))
    }

    /// ‖df‖_q with |df| the Frobenius norm of the differential.
    pub fn gradient_norm(&self, f: &GridFunction, q: f64) -> Result<f64> {
        self.check(f)?;
        Ok(self.grid.lp(&f.gradient_norm()?, q))
    }

    pub fn lp(&self, f: &GridFunction) -> Result<f64> {
        self.norm(f, self.p)
    }

    /// ‖f‖_p + ‖df‖_p.
    pub fn lp1(&self, f: &GridFunction) -> Result<f64> {
        Ok(self.lp(f)? + self.gradient_norm(f, self.p)?)
    }

    /// Max over nodes.
    pub fn c0(&self, f: &GridFunction) -> Result<f64> {
        self.norm(f, f64::INFINITY)
    }

    pub fn l1(&self, f: &GridFunction) -> Result<f64> {
        self.norm(f, 1.0)
    }

    pub fn l2(&self, f: &GridFunction) -> Result<f64> {
        self.norm(f, 2.0)
    }
}

/// Rejects functions whose componentwise integral exceeds
/// `MEAN_TOLERANCE·scale`.
pub(crate) fn require_mean_zero(f: &GridFunction, scale: f64) -> Result<()> {
    let integrals = f.integrate_components()?;
    let size = integrals.iter().map(|v| v * v).sum::<f64>().sqrt();
    if size > MEAN_TOLERANCE * scale {
        return Err(precondition(format!(
            "function must integrate to zero, measured integral {size:e} (mean {:e})",
            size / f.grid().measure()
        )));
    }
    Ok(())
}
