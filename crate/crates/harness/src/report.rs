//! Run reports: JSON with non-finite numbers as strings, and a CSV export.

use std::collections::BTreeMap;
use std::path::Path;

use geomest_core::sobolev::InequalityRecord;
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

/// Serializes `f64` as a JSON number, or as "NaN", "inf", "-inf".
pub mod num {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("NaN")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn parse(r: &str) -> Option<f64> {
        match r {
            "NaN" => Some(f64::NAN),
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            _ => None,
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => parse(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid number {s:?}"))),
        }
    }

    pub mod map {
        use std::collections::BTreeMap;

        use serde::ser::SerializeMap;
        use serde::{Deserialize, Deserializer, Serializer};

        struct Wrap(f64);

        impl serde::Serialize for Wrap {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                super::serialize(&self.0, s)
            }
        }

        impl<'de> Deserialize<'de> for Wrap {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                super::deserialize(d).map(Wrap)
            }
        }

        pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
            let mut out = s.serialize_map(Some(m.len()))?;
            for (k, v) in m {
                out.serialize_entry(k, &Wrap(*v))?;
            }
            out.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
            let m = BTreeMap::<String, Wrap>::deserialize(d)?;
            Ok(m.into_iter().map(|(k, v)| (k, v.0)).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub lemma_id: String,
    #[serde(with = "num")]
    pub lhs: f64,
    #[serde(with = "num")]
    pub rhs: f64,
    #[serde(with = "num")]
    pub ratio: f64,
    #[serde(with = "num::map")]
    pub params: BTreeMap<String, f64>,
    pub pass: bool,
    #[serde(with = "num")]
    pub constant_used: f64,
    pub constant_provenance: String,
    pub check: String,
    pub sample: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl RecordEntry {
    pub fn new(rec: InequalityRecord, check: &str, sample: usize, diagnostic: Option<String>) -> Self {
        Self {
            lemma_id: rec.lemma_id,
            lhs: rec.lhs,
            rhs: rec.rhs,
            ratio: rec.ratio,
            params: rec.params,
            pass: rec.pass,
            constant_used: rec.constant_used,
            constant_provenance: rec.provenance.to_string(),
            check: check.to_string(),
            sample,
            diagnostic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Worst {
    pub lemma_id: String,
    #[serde(with = "num")]
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub total: usize,
    pub failed: usize,
    #[serde(with = "num")]
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub failed: usize,
    pub worst: Option<Worst>,
    pub by_lemma: BTreeMap<String, LemmaSummary>,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub constants_version: String,
    pub records: Vec<RecordEntry>,
    pub summary: Summary,
}

/// NaN ranks above every ratio.
fn worse(a: f64, b: f64) -> bool {
    match (a.is_nan(), b.is_nan()) {
        (true, false) => true,
        (_, true) => false,
        _ => a > b,
    }
}

impl Summary {
    pub fn of(records: &[RecordEntry], wall_ms: u64) -> Self {
        let mut by_lemma: BTreeMap<String, LemmaSummary> = BTreeMap::new();
        let mut worst: Option<Worst> = None;
        for r in records {
            let s = by_lemma.entry(r.lemma_id.clone()).or_insert(LemmaSummary { total: 0, failed: 0, worst_ratio: 0.0 });
            s.total += 1;
            s.failed += usize::from(!r.pass);
            if worse(r.ratio, s.worst_ratio) {
                s.worst_ratio = r.ratio;
            }
            if worst.as_ref().is_none_or(|w| worse(r.ratio, w.ratio)) {
                worst = Some(Worst { lemma_id: r.lemma_id.clone(), ratio: r.ratio });
            }
        }
        Self {
            total: records.len(),
            failed: records.iter().filter(|r| !r.pass).count(),
            worst,
            by_lemma,
            wall_ms,
        }
    }
}

impl Report {
    pub fn new(constants_version: String, records: Vec<RecordEntry>, wall_ms: u64) -> Self {
        let summary = Summary::of(&records, wall_ms);
        Self { version: env!("CARGO_PKG_VERSION").to_string(), constants_version, records, summary }
    }

    pub fn passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
    }

    /// One row per record; params are `key=value` pairs joined by `;`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| HarnessError::Io(e.to_string());
        w.write_record([
            "lemma_id",
            "check",
            "sample",
            "lhs",
            "rhs",
            "ratio",
            "pass",
            "constant_used",
            "constant_provenance",
            "params",
            "diagnostic",
        ])
        .map_err(io)?;
        for r in &self.records {
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            w.write_record([
                r.lemma_id.clone(),
                r.check.clone(),
                r.sample.to_string(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.ratio.to_string(),
                r.pass.to_string(),
                r.constant_used.to_string(),
                r.constant_provenance.clone(),
                params.join(";"),
                r.diagnostic.clone().unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
    }
}
