//! End-to-end decoding runs.
//!
//! A run loads the proxy NAV and asset prices (or generates a synthetic
//! scenario), fits the decoder on dates up to `train_end`, decodes the
//! following dates starting from the terminal training belief, applies the
//! asymmetric transform and optional overlay, and assembles a [`RunReport`].

mod compare;
mod config;
mod output;
mod scenario;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Serialize;

pub use compare::{compare, compare_one, BenchmarkComparison, NamedSeries, Section};
pub use config::{
    AsymmetryOrder, AsymmetrySettings, BenchmarkSource, DataConfig, DecoderSettings, OverlaySettings, PipelineConfig,
};
pub use output::write_outputs;
pub use scenario::{asset_name, generate_scenario, Scenario, ScenarioConfig};

use crate::asymmetry::apply_asymmetry;
use crate::decoder::{self, fit_mle, DecodeResult, DecoderModel, FitOutcome, SanityFlag};
use crate::error::{Error, Result};
use crate::overlays::{self, HysteresisConfig, OverlaySignal, VixCurveSnapshot};
use crate::series::{self, PricePanel, SeriesKind, ValueSeries};
use crate::stats::{self, CorrMatrix, PerfReport, Sampling};

/// Everything a run reads, already parsed.
#[derive(Debug, Clone)]
pub struct PipelineData {
    pub prices: PricePanel,
    pub proxy_nav: ValueSeries,
    /// Benchmark return series.
    pub benchmarks: Vec<NamedSeries>,
    pub vix_curve: Option<Vec<VixCurveSnapshot>>,
    /// Known weights when the data is synthetic.
    pub true_weights: Option<PricePanel>,
}

impl PipelineData {
    pub fn from_scenario(s: &Scenario) -> Self {
        PipelineData {
            prices: s.prices.clone(),
            proxy_nav: s.nav.clone(),
            benchmarks: Vec::new(),
            vix_curve: None,
            true_weights: Some(s.true_weights.clone()),
        }
    }
}

pub fn load_data(cfg: &PipelineConfig) -> Result<PipelineData> {
    let mut data = match cfg.effective_scenario() {
        Some(s) => PipelineData::from_scenario(&generate_scenario(&s)?),
        None => {
            let (nav, prices) = (cfg.data.proxy_nav.as_ref(), cfg.data.asset_prices.as_ref());
            let (Some(nav), Some(prices)) = (nav, prices) else {
                return Err(Error::Config("proxy_nav and asset_prices are required".into()));
            };
            PipelineData {
                prices: series::load_panel(prices, SeriesKind::Price)?,
                proxy_nav: series::load_series(nav, SeriesKind::Nav)?,
                benchmarks: Vec::new(),
                vix_curve: None,
                true_weights: None,
            }
        }
    };
    for b in &cfg.data.benchmarks {
        let loaded = series::load_series(&b.path, b.kind)?;
        let returns = match b.kind {
            SeriesKind::Return => loaded,
            _ => series::returns_from_prices(&loaded).map_err(|e| e.in_file(b.path.display().to_string()))?,
        };
        data.benchmarks.push(NamedSeries {
            name: b.name.clone(),
            returns,
            sampling: b.sampling,
        });
    }
    if let Some(path) = &cfg.data.vix_curve {
        data.vix_curve = Some(overlays::load_vix_curve(path)?);
    }
    Ok(data)
}

/// Aligned daily inputs to the decoder.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub asset_returns: PricePanel,
    pub proxy_returns: ValueSeries,
    /// The series the decoder tracks: the transformed proxy in `pre` order,
    /// the raw proxy otherwise.
    pub target: ValueSeries,
}

pub fn prepare(data: &PipelineData, asymmetry: &AsymmetrySettings) -> Result<Prepared> {
    let asset_returns = series::panel_returns(&data.prices)?;
    let proxy = series::returns_from_prices(&data.proxy_nav)?;
    let (asset_returns, proxy_returns) = series::align_panel(&asset_returns, &proxy)?;
    let target = match asymmetry.order {
        AsymmetryOrder::Pre => apply_asymmetry(&proxy_returns, &asymmetry.config()?)?,
        AsymmetryOrder::Post => proxy_returns.clone(),
    };
    Ok(Prepared {
        asset_returns,
        proxy_returns,
        target,
    })
}

/// Fits the decoder on dates up to and including `train_end` only.
pub fn fit_training(prepared: &Prepared, train_end: NaiveDate, settings: &DecoderSettings) -> Result<FitOutcome> {
    let panel = prepared.asset_returns.until(train_end);
    let target = prepared.target.until(train_end);
    if target.is_empty() {
        return Err(Error::Precondition(format!("no data on or before train_end {train_end}")));
    }
    let template = settings.template(panel.n_assets())?;
    fit_mle(&panel, &target, &template, settings.trainable, &settings.fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub points: usize,
}

impl Span {
    fn of(s: &ValueSeries) -> Option<Span> {
        Some(Span {
            start: s.index().first()?,
            end: s.index().last()?,
            points: s.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub loglik: f64,
    pub template_loglik: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlaySummary {
    pub weight: f64,
    pub signal_days: usize,
    pub active_days: usize,
    pub hysteresis: Option<HysteresisConfig>,
}

/// Agreement with known weights on synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    /// Root-mean-square error of posterior weight means per asset.
    pub weight_rmse: BTreeMap<String, f64>,
    /// Correlation of replicated and proxy daily returns.
    pub return_correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub train: Span,
    pub test: Span,
    pub asymmetry: AsymmetrySettings,
    /// Name of the final strategy series.
    pub strategy: String,
    pub fit: FitSummary,
    /// Fitted model with its training prior.
    pub model: DecoderModel,
    pub test_loglik: f64,
    pub performance: BTreeMap<String, Section<PerfReport>>,
    pub strategy_correlations: Section<CorrMatrix>,
    pub benchmark_comparisons: Section<BTreeMap<String, Section<BenchmarkComparison>>>,
    pub yearly_returns: BTreeMap<String, BTreeMap<i32, f64>>,
    pub sanity_flags: Vec<SanityFlag>,
    pub overlay: Section<OverlaySummary>,
    pub ground_truth: Option<GroundTruth>,
}

/// A finished run: the report plus the series behind it.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub decode: DecodeResult,
    /// Daily test-period returns of every reported series, in report order.
    pub series: Vec<(String, ValueSeries)>,
    pub signals: Vec<OverlaySignal>,
    pub true_weights: Option<PricePanel>,
}

impl RunOutput {
    pub fn series(&self, name: &str) -> Option<&ValueSeries> {
        self.series.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }
}

fn check_split(index: &series::DateIndex, train_end: NaiveDate) -> Result<()> {
    match (index.first(), index.last()) {
        (Some(first), Some(last)) if first <= train_end && train_end < last => Ok(()),
        (Some(first), Some(last)) => Err(Error::Precondition(format!(
            "train_end {train_end} must fall within [{first}, {last}) so both periods are non-empty"
        ))),
        _ => Err(Error::InsufficientData { needed: 2, got: 0 }),
    }
}

fn gated_signals(
    curve: &[VixCurveSnapshot],
    settings: &OverlaySettings,
) -> Result<Vec<OverlaySignal>> {
    let mut signals = overlays::tail_hedge_signals(curve, &settings.tail_hedge)?;
    if let Some(h) = &settings.activation_hysteresis {
        let probs: Vec<f64> = signals.iter().map(|s| s.probability).collect();
        let states = overlays::hysteresis_states(&probs, h, false);
        let vix: BTreeMap<NaiveDate, f64> = curve.iter().map(|s| (s.date, s.vix_level)).collect();
        for (s, active) in signals.iter_mut().zip(states) {
            s.active = active;
            (s.w_st, s.w_mt) = overlays::allocate_st_mt(active, vix[&s.date], settings.tail_hedge.split_level);
        }
    }
    Ok(signals)
}

fn overlay_stage(
    strategy: &ValueSeries,
    curve: &[VixCurveSnapshot],
    settings: &OverlaySettings,
) -> Result<(ValueSeries, Vec<OverlaySignal>, OverlaySummary)> {
    let signals = gated_signals(curve, settings)?;
    let hedge = overlays::tail_hedge_returns(curve, &signals)?;
    let common = strategy.index().intersect(hedge.index());
    if common.len() < 2 {
        return Err(Error::Alignment("overlay and strategy share fewer than two dates".into()));
    }
    let combined = overlays::overlay_combine(&strategy.select(&common)?, &hedge.select(&common)?, settings.weight)?;
    let summary = OverlaySummary {
        weight: settings.weight,
        signal_days: signals.len(),
        active_days: signals.iter().filter(|s| s.active).count(),
        hysteresis: settings.activation_hysteresis,
    };
    Ok((combined, signals, summary))
}

fn ground_truth(decode: &DecodeResult, truth: &PricePanel, proxy: &ValueSeries) -> Result<GroundTruth> {
    let truth = truth.select(decode.index())?;
    let mut weight_rmse = BTreeMap::new();
    for (j, name) in decode.asset_names.iter().enumerate() {
        let col = truth
            .column(name)
            .ok_or_else(|| Error::Alignment(format!("no true weights for {name}")))?;
        let sse: f64 = decode
            .beliefs
            .iter()
            .zip(col.values())
            .map(|(b, w)| (b.mean()[j] - w).powi(2))
            .sum();
        weight_rmse.insert(name.clone(), (sse / col.len() as f64).sqrt());
    }
    let proxy = proxy.select(decode.index())?;
    Ok(GroundTruth {
        weight_rmse,
        return_correlation: stats::pearson(decode.replicated_returns.values(), proxy.values())?,
    })
}

/// Runs the pipeline on loaded data without touching the filesystem.
pub fn run_with_data(cfg: &PipelineConfig, data: &PipelineData) -> Result<RunOutput> {
    cfg.validate()?;
    let prepared = prepare(data, &cfg.asymmetry).map_err(|e| e.in_stage("prepare"))?;
    check_split(prepared.target.index(), cfg.train_end)?;

    let fit = fit_training(&prepared, cfg.train_end, &cfg.decoder).map_err(|e| e.in_stage("fit"))?;
    if let Some(w) = &fit.warning {
        log::warn!("{w}");
    }
    let train_target = prepared.target.until(cfg.train_end);
    let train_panel = prepared.asset_returns.until(cfg.train_end);
    let warm = decoder::filter(&train_panel, &train_target, &fit.model).map_err(|e| e.in_stage("train-filter"))?;
    let test_model = fit
        .model
        .with_initial(warm.terminal().clone())
        .map_err(|e| e.in_stage("decode"))?;

    let test_panel = prepared.asset_returns.after(cfg.train_end);
    let test_target = prepared.target.after(cfg.train_end);
    let mut decode = decoder::filter(&test_panel, &test_target, &test_model).map_err(|e| e.in_stage("decode"))?;
    decode.flags = decoder::sanity_check(
        decode.index().dates(),
        &decode.beliefs,
        test_model.bounds(),
        cfg.decoder.norm_growth_limit,
    );

    let asym = cfg.asymmetry.config()?;
    let proxy = prepared.proxy_returns.after(cfg.train_end);
    let decoded = decode.replicated_returns.clone();
    let (transformed, strategy_name) = match cfg.asymmetry.order {
        AsymmetryOrder::Pre => (test_target.clone(), "decoded"),
        AsymmetryOrder::Post => (
            apply_asymmetry(&decoded, &asym).map_err(|e| e.in_stage("asymmetry"))?,
            "transformed",
        ),
    };
    let strategy = if strategy_name == "decoded" { &decoded } else { &transformed };

    let mut series_out = vec![
        ("proxy".to_string(), proxy.clone()),
        ("decoded".to_string(), decoded.clone()),
        ("transformed".to_string(), transformed.clone()),
    ];
    let mut signals = Vec::new();
    let overlay = match &data.vix_curve {
        None => Section::skipped("no volatility curve configured"),
        Some(curve) => match overlay_stage(strategy, curve, &cfg.overlay) {
            Ok((combined, sig, summary)) => {
                series_out.push(("overlaid".to_string(), combined));
                signals = sig;
                Section::Ok { value: summary }
            }
            Err(e) => {
                log::warn!("overlay skipped: {e}");
                Section::skipped(e.to_string())
            }
        },
    };

    let mut performance = BTreeMap::new();
    let mut yearly = BTreeMap::new();
    for (name, s) in &series_out {
        performance.insert(name.clone(), Section::from_result(PerfReport::from_returns(s, Sampling::Daily)));
        yearly.insert(name.clone(), stats::yearly_returns(s).map_err(|e| e.in_stage("report"))?);
    }
    let strategy_correlations = {
        let aligned = series::align(&series_out.iter().map(|(_, s)| s.clone()).collect::<Vec<_>>());
        let labels: Vec<String> = series_out.iter().map(|(n, _)| n.clone()).collect();
        Section::from_result(aligned.and_then(|a| stats::corr_matrix(&labels, &a)))
    };

    let benchmark_comparisons = if data.benchmarks.is_empty() {
        Section::skipped("no benchmark series configured")
    } else {
        let test_benchmarks: Vec<NamedSeries> = data
            .benchmarks
            .iter()
            .map(|b| NamedSeries {
                returns: b.returns.after(cfg.train_end),
                ..b.clone()
            })
            .collect();
        Section::Ok {
            value: compare(strategy, &test_benchmarks, &cfg.horizons),
        }
    };

    let ground_truth = match &data.true_weights {
        Some(truth) => Some(ground_truth(&decode, truth, &proxy).map_err(|e| e.in_stage("report"))?),
        None => None,
    };

    let report = RunReport {
        train: Span::of(&train_target).expect("split checked"),
        test: Span::of(&test_target).expect("split checked"),
        asymmetry: cfg.asymmetry,
        strategy: strategy_name.to_string(),
        fit: FitSummary {
            loglik: fit.loglik,
            template_loglik: fit.template_loglik,
            iterations: fit.iterations,
            evaluations: fit.evaluations,
            converged: fit.converged,
            warning: fit.warning.clone(),
        },
        model: fit.model,
        test_loglik: decode.loglik,
        performance,
        strategy_correlations,
        benchmark_comparisons,
        yearly_returns: yearly,
        sanity_flags: decode.flags.clone(),
        overlay,
        ground_truth,
    };
    Ok(RunOutput {
        report,
        decode,
        series: series_out,
        signals,
        true_weights: data.true_weights.clone(),
    })
}

/// Loads the configured data and runs the pipeline.
pub fn run(cfg: &PipelineConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let data = load_data(cfg).map_err(|e| e.in_stage("load"))?;
    run_with_data(cfg, &data)
}

/// Runs the pipeline and writes its artifacts to the configured directory.
pub fn execute(cfg: &PipelineConfig) -> Result<RunOutput> {
    let out = run(cfg)?;
    write_outputs(&out, &cfg.output_dir).map_err(|e| e.in_stage("write"))?;
    Ok(out)
}
