//! Seeded verification harness for `geomest-core`.
//!
//! A suite is a list of [`checks::Check`]s. Each check turns one seeded RNG
//! into one or more [`InequalityRecord`](geomest_core::sobolev::InequalityRecord)s.
//! Fitted constants are not known to the checks: they measure, and the
//! runner attaches constants from a [`constants::ConstantsFile`] afterwards.

pub mod checks;
pub mod config;
pub mod constants;
pub mod family;
pub mod report;
pub mod runner;

use geomest_core::GeomError;
use thiserror::Error;

pub use checks::{manifest, Check, Measured, Suite};
pub use config::{GridSizes, Slack, SuiteConfig};
pub use constants::ConstantsFile;
pub use family::{generate, FamilyKind, Generated, RandomFamily};
pub use report::Report;
pub use runner::{calibrate, calibrate_checks, run, run_checks};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),

    #[error("calibration of {check}: {msg}")]
    Calibration { check: String, msg: String },

    #[error(transparent)]
    Geom(#[from] GeomError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Config(e.to_string())
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer, used to spread (seed, check, sample) into
/// independent RNG seeds.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
