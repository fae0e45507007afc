//! Check manifests, one module per suite.
//!
//! A check draws its data from the RNG it is handed and returns measured
//! records. Records with fitted provenance carry a constant key; the runner
//! replaces their placeholder constant with the calibrated value.

mod complexlin;
mod elliptic;
mod riemann;
mod sobolev;
mod transport;

use std::fmt;
use std::str::FromStr;

use geomest_core::sobolev::{ConstantProvenance, InequalityRecord};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::GridSizes;
use crate::Result;

pub use elliptic::{cr_pair, elliptic_pair, global_pair, smooth_data, sphere_spec};
pub use riemann::{half_plane_christoffel, sphere_christoffel};
pub use transport::{latitude_loop, rotation_angle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Riemann,
    Transport,
    Complexlin,
    Sobolev,
    Elliptic,
    All,
}

impl Suite {
    pub const MODULES: [Suite; 5] = [Suite::Riemann, Suite::Transport, Suite::Complexlin, Suite::Sobolev, Suite::Elliptic];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Riemann => "riemann",
            Suite::Transport => "transport",
            Suite::Complexlin => "complexlin",
            Suite::Sobolev => "sobolev",
            Suite::Elliptic => "elliptic",
            Suite::All => "all",
        }
    }

    /// Whether a run of this suite reads fitted constants.
    pub fn needs_constants(self) -> bool {
        manifest(self).iter().any(|c| c.fitted)
    }

    pub fn contains(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Suite::MODULES
            .iter()
            .chain(&[Suite::All])
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown suite id {s:?}; expected one of riemann, transport, complexlin, sobolev, elliptic, all"))
    }
}

/// Constant lookup for a fitted record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantKey {
    pub name: String,
    /// Constants additionally depend on the `du_p` parameter of the record.
    pub bucketed: bool,
}

impl ConstantKey {
    pub fn plain(name: impl Into<String>) -> Self {
        Self { name: name.into(), bucketed: false }
    }

    pub fn by_du(name: impl Into<String>) -> Self {
        Self { name: name.into(), bucketed: true }
    }
}

/// One measured record and, for fitted records, its constant key.
#[derive(Debug, Clone)]
pub struct Measured {
    pub record: InequalityRecord,
    pub key: Option<ConstantKey>,
}

impl Measured {
    /// A record whose constant is stated exactly.
    pub fn paper(record: InequalityRecord) -> Self {
        Self { record, key: None }
    }

    pub fn fitted(record: InequalityRecord, key: ConstantKey) -> Self {
        Self { record, key: Some(key) }
    }

    /// `lhs ≤ tolerance` for identities that hold up to discretization.
    pub fn identity(lemma_id: &str, residual: f64, tolerance: f64) -> Self {
        Self::paper(InequalityRecord::new(lemma_id, residual, 0.0, tolerance, 1.0, ConstantProvenance::Paper, 0.0))
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.record.params.insert(key.to_string(), value);
        self
    }
}

/// Shared, read-only inputs of a check.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub grids: GridSizes,
}

pub type CheckFn = fn(&Ctx, &mut ChaCha8Rng) -> Result<Vec<Measured>>;

pub struct Check {
    pub id: &'static str,
    pub suite: Suite,
    /// Lemma id used for failure records when the check itself errors.
    pub lemma_id: &'static str,
    /// Emits records with calibrated constants.
    pub fitted: bool,
    pub run: CheckFn,
}

impl fmt::Debug for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Check").field("id", &self.id).field("suite", &self.suite).finish()
    }
}

/// All checks of `suite` in manifest order.
pub fn manifest(suite: Suite) -> Vec<&'static Check> {
    let all: [&'static [Check]; 5] =
        [riemann::CHECKS, transport::CHECKS, complexlin::CHECKS, sobolev::CHECKS, elliptic::CHECKS];
    all.iter().flat_map(|c| c.iter()).filter(|c| suite.contains(c.suite)).collect()
}

/// Looks a check up by id.
pub fn check(id: &str) -> Option<&'static Check> {
    manifest(Suite::All).into_iter().find(|c| c.id == id)
}

pub(crate) fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    use rand::Rng;
    rng.random_range(lo..hi)
}

/// Least-squares slope of log y against log t.
pub(crate) fn log_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// The draw with the largest fitted constant among `k`, tagged with `draws`.
pub(crate) fn worst_of(k: usize, mut draw: impl FnMut() -> Result<Measured>) -> Result<Measured> {
    let mut best: Option<Measured> = None;
    for _ in 0..k {
        let m = draw()?;
        if best.as_ref().is_none_or(|b| m.record.fitted_constant() > b.record.fitted_constant()) {
            best = Some(m);
        }
    }
    Ok(best.expect("at least one draw").param("draws", k as f64))
}

pub(crate) fn rvec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, lo, hi)).collect()
}
