use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::checks::Suite;
use crate::{HarnessError, Result};

/// Grid resolutions shared by every check of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSizes {
    /// Circle nodes for the Fourier Poincaré check.
    pub circle: usize,
    /// Circle nodes for loop pairings.
    pub loop_circle: usize,
    /// [n_rho, n_theta] of the planar Sobolev annuli.
    pub annulus: [usize; 2],
    /// [n_rho, n_theta] of the elliptic annuli.
    pub elliptic_annulus: [usize; 2],
    /// Nodes per side of periodic grids.
    pub torus: usize,
    /// Nodes per side of rectangle grids.
    pub rect: usize,
    /// ODE steps per unit parameter of transport integrations.
    pub transport_steps: usize,
}

impl Default for GridSizes {
    fn default() -> Self {
        Self {
            circle: 256,
            loop_circle: 128,
            annulus: [96, 64],
            elliptic_annulus: [80, 128],
            torus: 32,
            rect: 33,
            transport_steps: 32,
        }
    }
}

impl GridSizes {
    /// Every resolution doubled; rectangle grids keep an odd node count.
    pub fn doubled(&self) -> Self {
        Self {
            circle: 2 * self.circle,
            loop_circle: 2 * self.loop_circle,
            annulus: [2 * self.annulus[0], 2 * self.annulus[1]],
            elliptic_annulus: [2 * self.elliptic_annulus[0], 2 * self.elliptic_annulus[1]],
            torus: 2 * self.torus,
            rect: 2 * self.rect - 1,
            transport_steps: 2 * self.transport_steps,
        }
    }

    fn validate(&self) -> Result<()> {
        let small = [
            ("circle", self.circle, 8),
            ("loop_circle", self.loop_circle, 8),
            ("annulus.n_rho", self.annulus[0], 8),
            ("annulus.n_theta", self.annulus[1], 8),
            ("elliptic_annulus.n_rho", self.elliptic_annulus[0], 8),
            ("elliptic_annulus.n_theta", self.elliptic_annulus[1], 8),
            ("torus", self.torus, 8),
            ("rect", self.rect, 5),
            ("transport_steps", self.transport_steps, 1),
        ];
        for (name, value, min) in small {
            if value < min {
                return Err(HarnessError::Config(format!("grids.{name} = {value} is below the minimum {min}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Slack {
    pub fitted: f64,
    pub paper: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Self { fitted: 0.05, paper: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub seed: u64,
    pub sample_count: usize,
    pub calibration_samples: usize,
    pub grids: GridSizes,
    pub slack: Slack,
    pub output: Option<PathBuf>,
    pub constants: Option<PathBuf>,
    /// Calibrate in memory before running instead of reading `constants`.
    pub calibration: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            seed: 0,
            sample_count: 100,
            calibration_samples: 50,
            grids: GridSizes::default(),
            slack: Slack::default(),
            output: None,
            constants: None,
            calibration: false,
        }
    }
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative `output` and `constants` paths are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.output, &mut cfg.constants].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(HarnessError::Config("sample_count must be positive".into()));
        }
        if self.calibration_samples == 0 {
            return Err(HarnessError::Config("calibration_samples must be positive".into()));
        }
        for (name, s) in [("fitted", self.slack.fitted), ("paper", self.slack.paper)] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(HarnessError::Config(format!("slack.{name} must be a finite non-negative number, got {s}")));
            }
        }
        self.grids.validate()
    }
}
