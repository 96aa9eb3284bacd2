use std::path::{Path, PathBuf};

use serde::Deserialize;
use tsrk_core::problems::BurgersProfile;
use tsrk_core::{Error, Result};

/// Stage count for a run: fixed, or chosen per step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StageChoice {
    Fixed(usize),
    Auto,
}

impl std::str::FromStr for StageChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(StageChoice::Auto);
        }
        s.parse::<usize>()
            .map(StageChoice::Fixed)
            .map_err(|_| format!("expected a stage count or 'auto', got '{s}'"))
    }
}

impl<'de> Deserialize<'de> for StageChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(StageChoice::Fixed(n)),
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Experiment settings as read from a JSON config file. Every field is
/// optional; command-line flags override whatever is set here.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub problem: Option<String>,
    pub h: Option<Vec<f64>>,
    pub h0: Option<f64>,
    pub halvings: Option<usize>,
    pub s: Option<StageChoice>,
    pub eps: Option<f64>,
    pub out: Option<PathBuf>,
    pub substeps: Option<usize>,
    pub grid: Option<usize>,
    pub profile: Option<BurgersProfile>,
    pub conservative: Option<bool>,
    pub certify: Option<bool>,
}

impl ExperimentFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parameter(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Parameter(format!("config {}: {e}", path.display())))
    }
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: String,
    pub h: Vec<f64>,
    pub s: StageChoice,
    pub eps: f64,
    pub out: Option<PathBuf>,
    pub substeps: usize,
    pub grid: Option<usize>,
    pub profile: BurgersProfile,
    pub conservative: bool,
    pub certify: bool,
}

/// Expands `h0` and `halvings` into the step list `h0, h0/2, ...`.
pub fn halving_steps(h0: f64, halvings: usize) -> Vec<f64> {
    (0..=halvings).map(|k| h0 / f64::powi(2.0, k as i32)).collect()
}

impl ExperimentConfig {
    pub fn validate(&self, min_halvings: usize) -> Result<()> {
        if self.h.is_empty() {
            return Err(Error::Parameter("no step sizes given (use --h or --h0 with --halvings)".into()));
        }
        if let Some(h) = self.h.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(Error::Parameter(format!("step sizes must be positive, got {h}")));
        }
        if self.h.len() < min_halvings + 1 {
            return Err(Error::Parameter(format!("need at least {min_halvings} halving(s)")));
        }
        if let StageChoice::Fixed(s) = self.s {
            if s < 2 {
                return Err(Error::Parameter(format!("stage count must be >= 2, got {s}")));
            }
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Parameter(format!("damping eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.substeps < 1 {
            return Err(Error::Parameter("starter needs at least one sub-step".into()));
        }
        Ok(())
    }
}
