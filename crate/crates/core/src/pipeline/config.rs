use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::scenario::ScenarioConfig;
use crate::asymmetry::{AsymmetryConfig, DEFAULT_AF};
use crate::decoder::{
    DecoderModel, FitOptions, TrainableMask, WeightBounds, DEFAULT_BOUNDS, DEFAULT_NORM_GROWTH_LIMIT,
};
use crate::error::{Error, Result};
use crate::overlays::{HysteresisConfig, TailHedgeConfig};
use crate::series::SeriesKind;
use crate::stats::{Horizon, Sampling};

/// Where the asymmetric transform sits relative to decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AsymmetryOrder {
    /// Transform the proxy returns, then decode the transformed series.
    #[default]
    Pre,
    /// Decode the raw proxy, then transform the replicated returns.
    Post,
}

impl fmt::Display for AsymmetryOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AsymmetryOrder::Pre => "pre",
            AsymmetryOrder::Post => "post",
        })
    }
}

impl FromStr for AsymmetryOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pre" => Ok(AsymmetryOrder::Pre),
            "post" => Ok(AsymmetryOrder::Post),
            other => Err(Error::Config(format!("asymmetry order must be pre or post, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSource {
    pub name: String,
    pub path: PathBuf,
    /// `nav` for index levels, `return` for period returns.
    #[serde(default = "default_benchmark_kind")]
    pub kind: SeriesKind,
    #[serde(default = "default_benchmark_sampling")]
    pub sampling: Sampling,
}

fn default_benchmark_kind() -> SeriesKind {
    SeriesKind::Nav
}

fn default_benchmark_sampling() -> Sampling {
    Sampling::Quarterly
}

/// Input data: either a proxy NAV with its asset price panel, or a
/// synthetic scenario generated on the fly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub proxy_nav: Option<PathBuf>,
    pub asset_prices: Option<PathBuf>,
    pub synthetic: Option<ScenarioConfig>,
    pub benchmarks: Vec<BenchmarkSource>,
    pub vix_curve: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymmetrySettings {
    pub af: f64,
    pub order: AsymmetryOrder,
}

impl Default for AsymmetrySettings {
    fn default() -> Self {
        AsymmetrySettings {
            af: DEFAULT_AF,
            order: AsymmetryOrder::Pre,
        }
    }
}

impl AsymmetrySettings {
    pub fn config(&self) -> Result<AsymmetryConfig> {
        AsymmetryConfig::new(self.af)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderSettings {
    /// Full template model. When absent, a random-walk template is built
    /// from the noise variances and bounds below.
    pub model: Option<DecoderModel>,
    pub process_noise: f64,
    pub obs_noise: f64,
    pub bounds: WeightBounds,
    pub trainable: TrainableMask,
    pub fit: FitOptions,
    pub norm_growth_limit: f64,
}

impl Default for DecoderSettings {
    fn default() -> Self {
        DecoderSettings {
            model: None,
            process_noise: 1e-6,
            obs_noise: 1e-6,
            bounds: DEFAULT_BOUNDS,
            trainable: TrainableMask::noise_scales(),
            fit: FitOptions::default(),
            norm_growth_limit: DEFAULT_NORM_GROWTH_LIMIT,
        }
    }
}

impl DecoderSettings {
    pub fn template(&self, n_assets: usize) -> Result<DecoderModel> {
        match &self.model {
            Some(model) if model.n_assets() != n_assets => Err(Error::Config(format!(
                "template model has {} assets but the panel has {n_assets}",
                model.n_assets()
            ))),
            Some(model) => Ok(model.clone()),
            None => DecoderModel::random_walk(n_assets, self.process_noise, self.obs_noise)
                .and_then(|m| m.with_bounds(vec![self.bounds; n_assets]))
                .map_err(|e| Error::Config(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlaySettings {
    pub tail_hedge: TailHedgeConfig,
    /// Notional of the overlay relative to the strategy.
    pub weight: f64,
    /// Replaces the single activation threshold with a two-threshold gate on
    /// the activation probability.
    pub activation_hysteresis: Option<HysteresisConfig>,
}

impl Default for OverlaySettings {
    fn default() -> Self {
        OverlaySettings {
            tail_hedge: TailHedgeConfig::default(),
            weight: 0.1,
            activation_hysteresis: None,
        }
    }
}

fn default_horizons() -> Vec<Horizon> {
    vec![
        Horizon::Y1,
        Horizon::Y3,
        Horizon::Y5,
        Horizon::Y7,
        Horizon::Y10,
        Horizon::Lifetime,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: DataConfig,
    /// Last date of the fitting window; the backtest starts after it.
    pub train_end: NaiveDate,
    #[serde(default)]
    pub asymmetry: AsymmetrySettings,
    #[serde(default)]
    pub decoder: DecoderSettings,
    #[serde(default)]
    pub overlay: OverlaySettings,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<Horizon>,
    pub output_dir: PathBuf,
    /// Overrides the synthetic scenario seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path.display().to_string()))?;
        Self::from_json(&text).map_err(|e| e.in_file(path.display().to_string()))
    }

    /// Structural checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        match (&d.proxy_nav, &d.asset_prices, &d.synthetic) {
            (Some(_), Some(_), None) => {}
            (None, None, Some(s)) => s.validate()?,
            _ => {
                return Err(Error::Config(
                    "data needs either proxy_nav with asset_prices, or a synthetic scenario".into(),
                ))
            }
        }
        let mut names: Vec<&str> = d.benchmarks.iter().map(|b| b.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("benchmark names must be unique".into()));
        }
        for b in &d.benchmarks {
            if !matches!(b.kind, SeriesKind::Nav | SeriesKind::Return) {
                return Err(Error::Config(format!("benchmark {} must be nav or return", b.name)));
            }
        }
        self.asymmetry.config()?;
        if let Some(m) = &self.decoder.model {
            if let Some(s) = &d.synthetic {
                if m.n_assets() != s.assets {
                    return Err(Error::Config("template model size differs from the scenario".into()));
                }
            }
        } else if !(self.decoder.process_noise >= 0.0 && self.decoder.obs_noise > 0.0) {
            return Err(Error::Config("decoder noise variances must be positive".into()));
        }
        if !(self.decoder.norm_growth_limit > 1.0) {
            return Err(Error::Config("norm growth limit must exceed 1".into()));
        }
        self.overlay.tail_hedge.validate()?;
        if !self.overlay.weight.is_finite() {
            return Err(Error::Config("overlay weight must be finite".into()));
        }
        if self.horizons.is_empty() {
            return Err(Error::Config("at least one correlation horizon is required".into()));
        }
        Ok(())
    }

    pub fn input_paths(&self) -> Vec<&Path> {
        let d = &self.data;
        d.proxy_nav
            .iter()
            .chain(&d.asset_prices)
            .map(PathBuf::as_path)
            .chain(d.benchmarks.iter().map(|b| b.path.as_path()))
            .chain(d.vix_curve.as_deref())
            .collect()
    }

    /// Confirms every referenced input file exists.
    pub fn check_paths(&self) -> Result<()> {
        for p in self.input_paths() {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} not found", p.display())));
            }
        }
        Ok(())
    }

    pub fn effective_scenario(&self) -> Option<ScenarioConfig> {
        self.data.synthetic.clone().map(|mut s| {
            if let Some(seed) = self.seed {
                s.seed = seed;
            }
            s
        })
    }
}
