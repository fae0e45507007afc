//! Calibrated constants: the versioned JSON file written by `calibrate` and
//! read by `run`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use geomest_core::sobolev::InequalityRecord;
use serde::{Deserialize, Serialize};

use crate::checks::{ConstantKey, Suite};
use crate::config::GridSizes;
use crate::{fnv1a, HarnessError, Result};

/// Calibrated constant = SAFETY_FACTOR × largest observed fitted constant.
pub const SAFETY_FACTOR: f64 = 1.1;

/// Lower edges of the ‖du‖_{L^p} buckets; the last bucket is unbounded.
pub const DU_EDGES: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];

/// Buckets with fewer calibration samples take the constant of the next
/// bucket up that has enough.
pub const MIN_BUCKET_SAMPLES: usize = 5;

/// Record parameter that selects the bucket of a bucketed key.
pub const DU_PARAM: &str = "du_p";

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub seed: u64,
    pub calibration_samples: usize,
    pub safety_factor: f64,
    pub grids: GridSizes,
    /// Calibration date, `YYYY-MM-DD` (UTC, or from SOURCE_DATE_EPOCH).
    pub date: String,
    pub suites: BTreeSet<Suite>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bucket {
    pub lo: f64,
    /// `None` for the unbounded top bucket.
    pub hi: Option<f64>,
    pub samples: usize,
    pub max_observed: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub provenance: String,
    pub checks: BTreeSet<String>,
    pub seed: u64,
    /// Records with a non-zero structural term.
    pub samples: usize,
    pub max_observed: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buckets: Option<Vec<Bucket>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsFile {
    pub version: String,
    pub metadata: Metadata,
    pub constants: BTreeMap<String, Entry>,
    /// Lemma ids checked against explicit constants.
    pub paper: BTreeSet<String>,
}

fn bucket_index(du: f64) -> usize {
    DU_EDGES.iter().rposition(|&e| du >= e).unwrap_or(0)
}

impl ConstantsFile {
    fn content_hash(constants: &BTreeMap<String, Entry>, paper: &BTreeSet<String>) -> String {
        let canonical = serde_json::to_string(&(constants, paper)).expect("constants serialize");
        format!("{FORMAT_VERSION}:{:016x}", fnv1a(canonical.as_bytes()))
    }

    fn seal(mut self) -> Self {
        self.version = Self::content_hash(&self.constants, &self.paper);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        let expected = Self::content_hash(&file.constants, &file.paper);
        if file.version != expected {
            return Err(HarnessError::Config(format!(
                "constants version {} does not match its contents ({expected})",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("constants file {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("constants serialize");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
    }

    /// Entries of `newer` replace those of `self`; paper ids are united.
    pub fn merge(mut self, newer: ConstantsFile) -> Self {
        self.constants.extend(newer.constants);
        self.paper.extend(newer.paper);
        let mut suites = std::mem::take(&mut self.metadata.suites);
        suites.extend(newer.metadata.suites.iter().copied());
        self.metadata = Metadata { suites, ..newer.metadata };
        self.seal()
    }

    /// The calibrated constant for `key` at the record parameters `params`.
    pub fn lookup(&self, key: &ConstantKey, params: &BTreeMap<String, f64>) -> std::result::Result<f64, String> {
        let entry = self.constants.get(&key.name).ok_or_else(|| format!("no calibrated constant {:?}", key.name))?;
        if !key.bucketed {
            return entry.value.ok_or_else(|| format!("constant {:?} is bucketed", key.name));
        }
        let buckets = entry.buckets.as_ref().ok_or_else(|| format!("constant {:?} is not bucketed", key.name))?;
        let du = *params.get(DU_PARAM).ok_or_else(|| format!("record has no {DU_PARAM} parameter"))?;
        if !du.is_finite() {
            return Err(format!("{DU_PARAM} = {du} is not finite"));
        }
        buckets
            .get(bucket_index(du))
            .map(|b| b.value)
            .ok_or_else(|| format!("constant {:?} has too few buckets", key.name))
    }
}

/// Today's date, or the date of SOURCE_DATE_EPOCH when it is set.
pub fn calibration_date() -> String {
    let epoch = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse::<i64>().ok());
    let when = match epoch.and_then(|s| chrono::DateTime::from_timestamp(s, 0)) {
        Some(t) => t,
        None => chrono::Utc::now(),
    };
    when.format("%Y-%m-%d").to_string()
}

/// Constants per bucket from (samples, max fitted constant) pairs.
///
/// A bucket's constant is the largest fitted constant at or below it, taken
/// from the first bucket at or above it with at least [`MIN_BUCKET_SAMPLES`]
/// samples. When no bucket is that well populated, every bucket uses the
/// overall maximum.
fn bucket_values(raw: &[(usize, Option<f64>)]) -> Vec<Bucket> {
    let mut cummax = Vec::with_capacity(raw.len());
    let mut running: Option<f64> = None;
    for (_, m) in raw {
        if let Some(m) = m {
            running = Some(running.map_or(*m, |r| r.max(*m)));
        }
        cummax.push(running);
    }
    let overall = running.unwrap_or(0.0);
    (0..raw.len())
        .map(|i| {
            let source = (i..raw.len()).find(|&j| raw[j].0 >= MIN_BUCKET_SAMPLES);
            let c = source.and_then(|j| cummax[j]).unwrap_or(overall);
            Bucket {
                lo: DU_EDGES[i],
                hi: DU_EDGES.get(i + 1).copied(),
                samples: raw[i].0,
                max_observed: raw[i].1,
                value: SAFETY_FACTOR * c,
            }
        })
        .collect()
}

#[derive(Debug, Default)]
struct Accum {
    bucketed: bool,
    checks: BTreeSet<String>,
    samples: usize,
    max: f64,
    buckets: [(usize, Option<f64>); DU_EDGES.len()],
}

/// Collects fitted records and turns them into a [`ConstantsFile`].
#[derive(Debug, Default)]
pub struct Calibrator {
    keys: BTreeMap<String, Accum>,
    paper: BTreeSet<String>,
}

impl Calibrator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mark_paper(&mut self, lemma_id: &str) {
        self.paper.insert(lemma_id.to_string());
    }

    pub fn observe(&mut self, check: &str, key: &ConstantKey, rec: &InequalityRecord) -> Result<()> {
        let err = |msg: String| HarnessError::Calibration { check: check.to_string(), msg };
        let acc = self.keys.entry(key.name.clone()).or_insert_with(|| Accum { bucketed: key.bucketed, ..Default::default() });
        if acc.bucketed != key.bucketed {
            return Err(err(format!("key {:?} used both with and without buckets", key.name)));
        }
        acc.checks.insert(check.to_string());
        if !(rec.lhs.is_finite() && rec.baseline.is_finite() && rec.structural.is_finite()) {
            return Err(err(format!("non-finite measurement for {}: lhs {}, structural {}", rec.lemma_id, rec.lhs, rec.structural)));
        }
        if rec.structural <= 0.0 {
            if rec.lhs > rec.baseline {
                return Err(err(format!("{}: lhs {} exceeds the baseline with a zero structural term", rec.lemma_id, rec.lhs)));
            }
            return Ok(());
        }
        let c = rec.fitted_constant();
        acc.samples += 1;
        acc.max = acc.max.max(c);
        if key.bucketed {
            let du = *rec.params.get(DU_PARAM).ok_or_else(|| err(format!("{} has no {DU_PARAM} parameter", rec.lemma_id)))?;
            let b = &mut acc.buckets[bucket_index(du)];
            b.0 += 1;
            b.1 = Some(b.1.map_or(c, |m: f64| m.max(c)));
        }
        Ok(())
    }

    pub fn finish(self, metadata: Metadata) -> Result<ConstantsFile> {
        let mut constants = BTreeMap::new();
        for (name, acc) in self.keys {
            let check = acc.checks.iter().next().cloned().unwrap_or_default();
            if acc.samples == 0 {
                return Err(HarnessError::Calibration {
                    check,
                    msg: format!("every structural term of {name:?} vanished; the constant is undetermined"),
                });
            }
            let buckets = acc.bucketed.then(|| bucket_values(&acc.buckets));
            let entry = Entry {
                provenance: "fitted".into(),
                checks: acc.checks,
                seed: metadata.seed,
                samples: acc.samples,
                max_observed: acc.max,
                value: (!acc.bucketed).then_some(SAFETY_FACTOR * acc.max),
                buckets,
            };
            constants.insert(name, entry);
        }
        Ok(ConstantsFile { version: String::new(), metadata, constants, paper: self.paper }.seal())
    }
}
