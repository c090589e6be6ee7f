//! Python bindings. Dates cross the boundary as `YYYY-MM-DD` strings and
//! structured results as plain dicts.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use navdecode::asymmetry::{self, AsymmetryConfig};
use navdecode::decoder::{self, FitOptions, ProcessNoiseParam, TrainableMask};
use navdecode::overlays::{self, HysteresisConfig};
use navdecode::pipeline::{self, PipelineConfig, ScenarioConfig};
use navdecode::series::{self, DateIndex, PricePanel, SeriesKind, ValueSeries};
use navdecode::stats::{self, PerfReport, Sampling};
use navdecode::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_py_err(e: Error) -> PyErr {
    match e.root() {
        Error::Numeric(_) | Error::Io(_) | Error::Json(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_dates(dates: &[String]) -> PyResult<DateIndex> {
    let parsed = dates
        .iter()
        .map(|d| series::parse_date(d).ok_or_else(|| PyValueError::new_err(format!("bad date {d:?}"))))
        .collect::<PyResult<Vec<NaiveDate>>>()?;
    DateIndex::new(parsed).map_err(to_py_err)
}

fn date_strings(dates: &[NaiveDate]) -> Vec<String> {
    dates.iter().map(|d| d.to_string()).collect()
}

fn return_series(dates: &[String], values: Vec<f64>) -> PyResult<ValueSeries> {
    ValueSeries::new(parse_dates(dates)?, values, SeriesKind::Return).map_err(to_py_err)
}

fn parse_sampling(s: &str) -> PyResult<Sampling> {
    s.parse().map_err(|e: Error| PyValueError::new_err(e.to_string()))
}

/// Gaussian belief over portfolio weights.
#[pyclass(name = "WeightBelief", module = "navdecode", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWeightBelief {
    inner: decoder::WeightBelief,
}

#[pymethods]
impl PyWeightBelief {
    #[new]
    fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> PyResult<Self> {
        let k = mean.len();
        if cov.len() != k || cov.iter().any(|r| r.len() != k) {
            return Err(PyValueError::new_err("covariance must be k x k"));
        }
        let cov = DMatrix::from_fn(k, k, |i, j| cov[i][j]);
        decoder::WeightBelief::new(DVector::from_vec(mean), cov)
            .map(|inner| PyWeightBelief { inner })
            .map_err(to_py_err)
    }

    #[staticmethod]
    fn equal_weight(k: usize) -> Self {
        PyWeightBelief {
            inner: decoder::WeightBelief::equal_weight(k),
        }
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.mean().iter().copied().collect()
    }

    #[getter]
    fn cov(&self) -> Vec<Vec<f64>> {
        let c = self.inner.cov();
        (0..c.nrows()).map(|i| c.row(i).iter().copied().collect()).collect()
    }

    fn __repr__(&self) -> String {
        format!("WeightBelief(mean={:?})", self.mean())
    }
}

/// Linear-Gaussian weight dynamics with an observation noise variance.
#[pyclass(name = "DecoderModel", module = "navdecode", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDecoderModel {
    inner: decoder::DecoderModel,
}

#[pymethods]
impl PyDecoderModel {
    /// Random-walk weights with `Q = process_var * I` and the equal-weight prior.
    #[staticmethod]
    fn random_walk(k: usize, process_var: f64, obs_noise: f64) -> PyResult<Self> {
        decoder::DecoderModel::random_walk(k, process_var, obs_noise)
            .map(|inner| PyDecoderModel { inner })
            .map_err(to_py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| PyDecoderModel { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn with_initial(&self, belief: &PyWeightBelief) -> PyResult<Self> {
        self.inner
            .with_initial(belief.inner.clone())
            .map(|inner| PyDecoderModel { inner })
            .map_err(to_py_err)
    }

    #[getter]
    fn n_assets(&self) -> usize {
        self.inner.n_assets()
    }

    #[getter]
    fn obs_noise(&self) -> f64 {
        self.inner.obs_noise()
    }

    #[getter]
    fn process_noise(&self) -> Vec<Vec<f64>> {
        let q = self.inner.process_noise();
        (0..q.nrows()).map(|i| q.row(i).iter().copied().collect()).collect()
    }

    fn __repr__(&self) -> String {
        format!("DecoderModel(n_assets={}, obs_noise={:e})", self.n_assets(), self.obs_noise())
    }
}

/// Output of one decoding pass.
#[pyclass(name = "DecodeResult", module = "navdecode", frozen, skip_from_py_object)]
struct PyDecodeResult {
    inner: decoder::DecodeResult,
}

#[pymethods]
impl PyDecodeResult {
    #[getter]
    fn dates(&self) -> Vec<String> {
        date_strings(self.inner.index().dates())
    }

    #[getter]
    fn asset_names(&self) -> Vec<String> {
        self.inner.asset_names.clone()
    }

    /// Posterior weight means, one row per date.
    #[getter]
    fn weights(&self) -> Vec<Vec<f64>> {
        self.inner.beliefs.iter().map(|b| b.mean().iter().copied().collect()).collect()
    }

    #[getter]
    fn applied_weights(&self) -> Vec<Vec<f64>> {
        self.inner.applied_weights.clone()
    }

    #[getter]
    fn replicated_returns(&self) -> Vec<f64> {
        self.inner.replicated_returns.values().to_vec()
    }

    #[getter]
    fn replicated_nav(&self) -> Vec<f64> {
        self.inner.replicated_nav.values().to_vec()
    }

    #[getter]
    fn loglik(&self) -> f64 {
        self.inner.loglik
    }

    fn standardized_innovations(&self) -> Vec<f64> {
        self.inner.standardized_innovations()
    }

    fn terminal(&self) -> PyWeightBelief {
        PyWeightBelief {
            inner: self.inner.terminal().clone(),
        }
    }

    fn sanity_flags<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.flags)
    }
}

fn asset_panel(dates: &[String], asset_returns: Vec<Vec<f64>>, names: Option<Vec<String>>) -> PyResult<PricePanel> {
    let names = names.unwrap_or_else(|| (0..asset_returns.len()).map(pipeline::asset_name).collect());
    PricePanel::new(parse_dates(dates)?, names, asset_returns, SeriesKind::Return).map_err(to_py_err)
}

/// Decodes weights from NAV returns. `asset_returns` holds one list per asset.
#[pyfunction]
#[pyo3(signature = (dates, asset_returns, nav_returns, model, asset_names=None))]
fn decode(
    dates: Vec<String>,
    asset_returns: Vec<Vec<f64>>,
    nav_returns: Vec<f64>,
    model: &PyDecoderModel,
    asset_names: Option<Vec<String>>,
) -> PyResult<PyDecodeResult> {
    let panel = asset_panel(&dates, asset_returns, asset_names)?;
    let nav = return_series(&dates, nav_returns)?;
    decoder::filter(&panel, &nav, &model.inner)
        .map(|inner| PyDecodeResult { inner })
        .map_err(to_py_err)
}

/// Maximum-likelihood fit of the noise scales (and optionally the
/// transition coupling). Returns `(model, loglik, template_loglik)`.
#[pyfunction]
#[pyo3(signature = (dates, asset_returns, nav_returns, template, process_noise="scalar", obs_noise=true, transition_coupling=false, max_iterations=400))]
#[allow(clippy::too_many_arguments)]
fn fit_mle(
    dates: Vec<String>,
    asset_returns: Vec<Vec<f64>>,
    nav_returns: Vec<f64>,
    template: &PyDecoderModel,
    process_noise: &str,
    obs_noise: bool,
    transition_coupling: bool,
    max_iterations: usize,
) -> PyResult<(PyDecoderModel, f64, f64)> {
    let process_noise = match process_noise {
        "fixed" => ProcessNoiseParam::Fixed,
        "scalar" => ProcessNoiseParam::Scalar,
        "diagonal" => ProcessNoiseParam::Diagonal,
        other => return Err(PyValueError::new_err(format!("unknown process noise mode {other:?}"))),
    };
    let mask = TrainableMask {
        process_noise,
        obs_noise,
        transition_coupling,
    };
    let opts = FitOptions {
        max_iterations,
        ..Default::default()
    };
    let panel = asset_panel(&dates, asset_returns, None)?;
    let nav = return_series(&dates, nav_returns)?;
    let fit = decoder::fit_mle(&panel, &nav, &template.inner, mask, &opts).map_err(to_py_err)?;
    Ok((PyDecoderModel { inner: fit.model }, fit.loglik, fit.template_loglik))
}

#[pyfunction]
fn sharpe(annual_return: f64, annual_vol: f64) -> PyResult<f64> {
    stats::sharpe(annual_return, annual_vol).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (returns, sampling="daily"))]
fn sortino(returns: Vec<f64>, sampling: &str) -> PyResult<f64> {
    stats::sortino(&returns, parse_sampling(sampling)?).map_err(to_py_err)
}

/// `(annual_return, annual_vol)`.
#[pyfunction]
#[pyo3(signature = (returns, sampling="daily"))]
fn annualize(returns: Vec<f64>, sampling: &str) -> PyResult<(f64, f64)> {
    stats::annualize(&returns, parse_sampling(sampling)?).map_err(to_py_err)
}

/// `(max_dd, worst10_dd)` of a NAV path.
#[pyfunction]
fn drawdown_stats(nav: Vec<f64>) -> PyResult<(f64, f64)> {
    stats::drawdown_stats_values(&nav)
        .map(|d| (d.max_dd, d.worst10_dd))
        .map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (dates, returns, sampling="daily"))]
fn perf_report<'py>(py: Python<'py>, dates: Vec<String>, returns: Vec<f64>, sampling: &str) -> PyResult<Bound<'py, PyAny>> {
    let s = return_series(&dates, returns)?;
    let report = PerfReport::from_returns(&s, parse_sampling(sampling)?).map_err(to_py_err)?;
    to_dict(py, &report)
}

/// Scales negative returns by `af`; nonnegative returns pass through.
#[pyfunction]
#[pyo3(signature = (returns, af=asymmetry::DEFAULT_AF))]
fn apply_asymmetry(returns: Vec<f64>, af: f64) -> PyResult<Vec<f64>> {
    let cfg = AsymmetryConfig::new(af).map_err(to_py_err)?;
    Ok(returns.into_iter().map(|r| cfg.transform(r)).collect())
}

#[pyfunction]
#[pyo3(signature = (signal, theta_high, theta_low, initial_state=false))]
fn hysteresis(signal: Vec<f64>, theta_high: f64, theta_low: f64, initial_state: bool) -> PyResult<Vec<bool>> {
    let cfg = HysteresisConfig::new(theta_high, theta_low).map_err(to_py_err)?;
    Ok(overlays::hysteresis_states(&signal, &cfg, initial_state))
}

/// Correlation matrix of equally long series, as a list of rows.
#[pyfunction]
fn corr_matrix(series: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let n = series.first().map_or(0, Vec::len);
    let index = DateIndex::new(
        (0..n as u64)
            .map(|i| NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + chrono::Days::new(i))
            .collect(),
    )
    .map_err(to_py_err)?;
    let labels: Vec<String> = (0..series.len()).map(|i| i.to_string()).collect();
    let values = series
        .into_iter()
        .map(|v| ValueSeries::new(index.clone(), v, SeriesKind::Return))
        .collect::<navdecode::Result<Vec<_>>>()
        .map_err(to_py_err)?;
    stats::corr_matrix(&labels, &values)
        .map(|m| m.entries)
        .map_err(to_py_err)
}

/// Synthetic prices, NAV and true weights as a dict of lists.
#[pyfunction]
#[pyo3(signature = (seed=0, assets=4, days=1000, weight_vol=1e-3, obs_noise=1e-4))]
fn generate_scenario<'py>(
    py: Python<'py>,
    seed: u64,
    assets: usize,
    days: usize,
    weight_vol: f64,
    obs_noise: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let s = pipeline::generate_scenario(&ScenarioConfig {
        seed,
        assets,
        days,
        weight_vol,
        obs_noise,
        ..Default::default()
    })
    .map_err(to_py_err)?;
    let out = serde_json::json!({
        "dates": date_strings(s.asset_returns.dates()),
        "asset_names": s.asset_returns.asset_names(),
        "asset_returns": s.asset_returns.columns(),
        "nav_returns": s.nav_returns.values(),
        "true_weights": s.true_weights.columns(),
    });
    to_dict(py, &out)
}

/// Runs the full pipeline from a JSON config string and returns the report.
/// Artifacts are written only when `write` is true.
#[pyfunction]
#[pyo3(signature = (config_json, write=false))]
fn run_pipeline<'py>(py: Python<'py>, config_json: &str, write: bool) -> PyResult<Bound<'py, PyAny>> {
    let cfg = PipelineConfig::from_json(config_json).map_err(to_py_err)?;
    let out = if write {
        pipeline::execute(&cfg)
    } else {
        pipeline::run(&cfg)
    }
    .map_err(to_py_err)?;
    to_dict(py, &out.report)
}

#[pymodule(name = "navdecode")]
fn navdecode_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWeightBelief>()?;
    m.add_class::<PyDecoderModel>()?;
    m.add_class::<PyDecodeResult>()?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(fit_mle, m)?)?;
    m.add_function(wrap_pyfunction!(sharpe, m)?)?;
    m.add_function(wrap_pyfunction!(sortino, m)?)?;
    m.add_function(wrap_pyfunction!(annualize, m)?)?;
    m.add_function(wrap_pyfunction!(drawdown_stats, m)?)?;
    m.add_function(wrap_pyfunction!(perf_report, m)?)?;
    m.add_function(wrap_pyfunction!(apply_asymmetry, m)?)?;
    m.add_function(wrap_pyfunction!(hysteresis, m)?)?;
    m.add_function(wrap_pyfunction!(corr_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(generate_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
