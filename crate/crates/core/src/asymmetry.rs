//! Asymmetric return transform: negative returns are multiplied by a factor
//! in `[0, 1]`, positive returns pass through untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{SeriesKind, ValueSeries};

pub const DEFAULT_AF: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct AsymmetryConfig {
    af: f64,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    #[serde(default = "default_af")]
    af: f64,
}

fn default_af() -> f64 {
    DEFAULT_AF
}

impl TryFrom<RawConfig> for AsymmetryConfig {
    type Error = Error;
    fn try_from(raw: RawConfig) -> Result<Self> {
        AsymmetryConfig::new(raw.af)
    }
}

impl From<AsymmetryConfig> for RawConfig {
    fn from(cfg: AsymmetryConfig) -> Self {
        RawConfig { af: cfg.af }
    }
}

impl Default for AsymmetryConfig {
    fn default() -> Self {
        AsymmetryConfig { af: DEFAULT_AF }
    }
}

impl AsymmetryConfig {
    pub fn new(af: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&af) {
            return Err(Error::Config(format!("asymmetry factor must lie in [0, 1], got {af}")));
        }
        Ok(AsymmetryConfig { af })
    }

    pub fn af(&self) -> f64 {
        self.af
    }

    #[inline]
    pub fn transform(&self, r: f64) -> f64 {
        if r >= 0.0 {
            r
        } else {
            self.af * r
        }
    }
}

pub fn apply_asymmetry(returns: &ValueSeries, cfg: &AsymmetryConfig) -> Result<ValueSeries> {
    if returns.kind() != SeriesKind::Return {
        return Err(Error::InvalidInput("asymmetry applies to return series".into()));
    }
    returns.map_values(|r| cfg.transform(r))
}
