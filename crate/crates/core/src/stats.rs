//! Performance, drawdown and correlation statistics.
//!
//! Conventions: simple returns, zero risk-free rate, 252 periods per year for
//! daily data and 4 for quarterly data. Kurtosis is reported as excess
//! kurtosis, with the usual small-sample corrections for both skew and
//! kurtosis.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{self, Period, SeriesKind, ValueSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Daily,
    Quarterly,
}

impl Sampling {
    pub fn periods_per_year(self) -> usize {
        match self {
            Sampling::Daily => 252,
            Sampling::Quarterly => 4,
        }
    }
}

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampling::Daily => "daily",
            Sampling::Quarterly => "quarterly",
        })
    }
}

impl std::str::FromStr for Sampling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "daily" => Ok(Sampling::Daily),
            "quarterly" => Ok(Sampling::Quarterly),
            other => Err(Error::InvalidInput(format!("unknown sampling `{other}`"))),
        }
    }
}

/// How the annual return is derived from per-period returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnnualizationMode {
    /// `(prod(1 + r))^(P/T) - 1`
    #[default]
    Geometric,
    /// `mean(r) * P`
    Arithmetic,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (denominator `n - 1`).
pub fn sample_std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

fn require(returns: &[f64], needed: usize) -> Result<()> {
    if returns.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: returns.len(),
        });
    }
    Ok(())
}

/// Annualised (return, volatility) with geometric compounding.
pub fn annualize(returns: &[f64], sampling: Sampling) -> Result<(f64, f64)> {
    annualize_with(returns, sampling, AnnualizationMode::Geometric)
}

pub fn annualize_with(
    returns: &[f64],
    sampling: Sampling,
    mode: AnnualizationMode,
) -> Result<(f64, f64)> {
    require(returns, 2)?;
    let p = sampling.periods_per_year() as f64;
    let t = returns.len() as f64;
    let annual_return = match mode {
        AnnualizationMode::Geometric => {
            let growth: f64 = returns.iter().map(|r| 1.0 + r).product();
            if growth <= 0.0 {
                return Err(Error::Undefined("compounded growth is non-positive".into()));
            }
            growth.powf(p / t) - 1.0
        }
        AnnualizationMode::Arithmetic => mean(returns) * p,
    };
    Ok((annual_return, sample_std(returns) * p.sqrt()))
}

/// Annual return over annual volatility, zero risk-free rate.
pub fn sharpe(annual_return: f64, annual_vol: f64) -> Result<f64> {
    if !(annual_vol > 0.0) {
        return Err(Error::Undefined(format!(
            "sharpe ratio with volatility {annual_vol}"
        )));
    }
    Ok(annual_return / annual_vol)
}

/// Annual return over annualised downside deviation, where the downside
/// deviation averages `min(r, 0)^2` over every period.
pub fn sortino(returns: &[f64], sampling: Sampling) -> Result<f64> {
    require(returns, 2)?;
    if !returns.iter().any(|&r| r < 0.0) {
        return Err(Error::Undefined("sortino ratio without negative returns".into()));
    }
    let (annual_return, _) = annualize(returns, sampling)?;
    let downside = (returns.iter().map(|r| r.min(0.0).powi(2)).sum::<f64>()
        / returns.len() as f64)
        .sqrt();
    Ok(annual_return / (downside * (sampling.periods_per_year() as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub skew: f64,
    /// `None` for exactly three observations, where the corrected estimator
    /// is undefined.
    pub excess_kurtosis: Option<f64>,
}

/// Bias-corrected sample skewness and excess kurtosis.
pub fn skew_kurtosis(returns: &[f64]) -> Result<Moments> {
    require(returns, 3)?;
    let n = returns.len() as f64;
    let m = mean(returns);
    let central = |k: i32| returns.iter().map(|r| (r - m).powi(k)).sum::<f64>() / n;
    let m2 = central(2);
    if !(m2 > 0.0) || m2.sqrt() <= f64::EPSILON * m.abs() {
        return Err(Error::Undefined("moments of a zero-variance series".into()));
    }
    let g1 = central(3) / m2.powf(1.5);
    let skew = (n * (n - 1.0)).sqrt() / (n - 2.0) * g1;
    let excess_kurtosis = (returns.len() >= 4).then(|| {
        let g2 = central(4) / (m2 * m2) - 3.0;
        ((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0))
    });
    Ok(Moments {
        skew,
        excess_kurtosis,
    })
}

/// `1 - nav_t / max_{s<=t} nav_s` for every point.
pub fn drawdowns(nav: &[f64]) -> Vec<f64> {
    let mut peak = f64::NEG_INFINITY;
    nav.iter()
        .map(|&v| {
            peak = peak.max(v);
            1.0 - v / peak
        })
        .collect()
}

/// Percentile with linear interpolation between order statistics; `q` in [0, 1].
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrawdownStats {
    pub max_dd: f64,
    /// 90th percentile of the drawdown distribution.
    pub worst10_dd: f64,
    pub series: Vec<f64>,
}

pub fn drawdown_stats_values(nav: &[f64]) -> Result<DrawdownStats> {
    require(nav, 1)?;
    if let Some(v) = nav.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidInput(format!("non-positive nav {v}")));
    }
    let series = drawdowns(nav);
    let max_dd = series.iter().copied().fold(0.0, f64::max);
    let worst10_dd = percentile(&series, 0.9);
    Ok(DrawdownStats {
        max_dd,
        worst10_dd,
        series,
    })
}

pub fn drawdown_stats(nav: &ValueSeries) -> Result<DrawdownStats> {
    if nav.kind() == SeriesKind::Return {
        return Err(Error::InvalidInput("drawdowns need a nav or price series".into()));
    }
    drawdown_stats_values(nav.values())
}

/// Pearson correlation of two equal-length samples.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput("correlation of unequal-length samples".into()));
    }
    require(a, 2)?;
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(Error::Undefined("correlation with a zero-variance sample".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Lagged sample autocorrelation, taken as the Pearson correlation between
/// the series and its `lag`-shifted copy.
pub fn autocorr(returns: &[f64], lag: usize) -> Result<f64> {
    if lag == 0 || lag >= returns.len() {
        return Err(Error::Precondition(format!(
            "autocorrelation lag {lag} needs 1 <= lag < {}",
            returns.len()
        )));
    }
    if returns.len() - lag < 2 {
        return Err(Error::InsufficientData {
            needed: lag + 2,
            got: returns.len(),
        });
    }
    pearson(&returns[lag..], &returns[..returns.len() - lag])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrMatrix {
    pub labels: Vec<String>,
    /// Row-major.
    pub entries: Vec<Vec<f64>>,
}

impl CorrMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.entries[i][j])
    }
}

/// Pairwise Pearson correlations of series sharing one index.
pub fn corr_matrix(labels: &[String], series: &[ValueSeries]) -> Result<CorrMatrix> {
    if series.len() < 2 || labels.len() != series.len() {
        return Err(Error::InvalidInput(
            "correlation matrix needs at least two labelled series".into(),
        ));
    }
    if series.iter().any(|s| s.index() != series[0].index()) {
        return Err(Error::Alignment("correlation matrix inputs must share an index".into()));
    }
    let n = series.len();
    let mut entries = vec![vec![0.0; n]; n];
    for i in 0..n {
        if series[i].len() < 2 || sample_std(series[i].values()) == 0.0 {
            return Err(Error::Undefined(format!("series `{}` has zero variance", labels[i])));
        }
        entries[i][i] = 1.0;
        for j in 0..i {
            let c = pearson(series[i].values(), series[j].values())?;
            entries[i][j] = c;
            entries[j][i] = c;
        }
    }
    Ok(CorrMatrix {
        labels: labels.to_vec(),
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Horizon {
    #[serde(rename = "1Y")]
    Y1,
    #[serde(rename = "3Y")]
    Y3,
    #[serde(rename = "5Y")]
    Y5,
    #[serde(rename = "7Y")]
    Y7,
    #[serde(rename = "10Y")]
    Y10,
    #[serde(rename = "lifetime")]
    Lifetime,
}

impl Horizon {
    pub const ALL: [Horizon; 6] = [
        Horizon::Y1,
        Horizon::Y3,
        Horizon::Y5,
        Horizon::Y7,
        Horizon::Y10,
        Horizon::Lifetime,
    ];

    pub fn years(self) -> Option<usize> {
        match self {
            Horizon::Y1 => Some(1),
            Horizon::Y3 => Some(3),
            Horizon::Y5 => Some(5),
            Horizon::Y7 => Some(7),
            Horizon::Y10 => Some(10),
            Horizon::Lifetime => None,
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.years() {
            Some(y) => write!(f, "{y}Y"),
            None => f.write_str("lifetime"),
        }
    }
}

impl std::str::FromStr for Horizon {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Horizon::ALL
            .into_iter()
            .find(|h| h.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown horizon `{s}`")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HorizonCorrelations {
    pub correlations: BTreeMap<Horizon, f64>,
    pub skipped: Vec<Horizon>,
}

/// Pearson correlation over trailing windows ending at the last common date.
/// Horizons longer than the shared history are skipped.
pub fn corr_over_horizons(
    a: &ValueSeries,
    b: &ValueSeries,
    horizons: &[Horizon],
    sampling: Sampling,
) -> Result<HorizonCorrelations> {
    let aligned = series::align(&[a.clone(), b.clone()])?;
    let (a, b) = (&aligned[0], &aligned[1]);
    let mut out = HorizonCorrelations::default();
    for &h in horizons {
        let window = match h.years() {
            Some(y) => y * sampling.periods_per_year(),
            None => a.len(),
        };
        if window > a.len() {
            log::warn!(
                "horizon {h} needs {window} points but only {} are available; skipped",
                a.len()
            );
            out.skipped.push(h);
            continue;
        }
        let c = pearson(a.tail(window).values(), b.tail(window).values())?;
        out.correlations.insert(h, c);
    }
    Ok(out)
}

/// Compounded return per calendar year.
pub fn yearly_returns(returns: &ValueSeries) -> Result<BTreeMap<i32, f64>> {
    let yearly = series::resample_compound(returns, Period::Yearly)?;
    Ok(yearly.iter().map(|(d, r)| (d.year(), r)).collect())
}

/// `annual_return / drawdown`, absent when the drawdown is zero.
pub fn return_over_drawdown(annual_return: f64, drawdown: f64) -> Option<f64> {
    (drawdown > 0.0).then(|| annual_return / drawdown)
}

/// One column of a performance table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub annual_return: f64,
    pub annual_vol: f64,
    pub skew: f64,
    pub kurtosis: f64,
    pub sharpe: f64,
    /// Absent when the series has no negative return.
    pub sortino: Option<f64>,
    pub max_dd: f64,
    pub worst10_dd: f64,
    pub ret_over_maxdd: Option<f64>,
    pub ret_over_worst10dd: Option<f64>,
    pub autocorr_lag1: f64,
    pub sampling: Sampling,
}

impl PerfReport {
    /// Builds the report from a return series. Drawdowns are measured on the
    /// NAV compounded from 1.0, including that starting point.
    pub fn from_returns(returns: &ValueSeries, sampling: Sampling) -> Result<PerfReport> {
        if returns.kind() != SeriesKind::Return {
            return Err(Error::InvalidInput("performance report needs returns".into()));
        }
        let r = returns.values();
        require(r, 4)?;
        let (annual_return, annual_vol) = annualize(r, sampling)?;
        let moments = skew_kurtosis(r)?;
        let sharpe = sharpe(annual_return, annual_vol)?;
        let sortino = match sortino(r, sampling) {
            Ok(v) => Some(v),
            Err(Error::Undefined(_)) => None,
            Err(e) => return Err(e),
        };
        let mut nav = Vec::with_capacity(r.len() + 1);
        nav.push(1.0);
        for x in r {
            let next = nav.last().unwrap() * (1.0 + x);
            nav.push(next);
        }
        let dd = drawdown_stats_values(&nav)?;
        Ok(PerfReport {
            start_date: returns.index().first().unwrap(),
            end_date: returns.index().last().unwrap(),
            annual_return,
            annual_vol,
            skew: moments.skew,
            kurtosis: moments
                .excess_kurtosis
                .ok_or_else(|| Error::Undefined("kurtosis of three points".into()))?,
            sharpe,
            sortino,
            max_dd: dd.max_dd,
            worst10_dd: dd.worst10_dd,
            ret_over_maxdd: return_over_drawdown(annual_return, dd.max_dd),
            ret_over_worst10dd: return_over_drawdown(annual_return, dd.worst10_dd),
            autocorr_lag1: autocorr(r, 1)?,
            sampling,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::DateIndex;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn gaussian(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn series(values: &[f64], start: &str) -> ValueSeries {
        let start = series::parse_date(start).unwrap();
        let dates = (0..values.len())
            .map(|i| start + chrono::Days::new(i as u64))
            .collect();
        ValueSeries::new(DateIndex::new(dates).unwrap(), values.to_vec(), SeriesKind::Return)
            .unwrap()
    }

    #[test]
    fn annualize_quarterly_compounding() {
        let (ret, vol) = annualize(&[0.01; 4], Sampling::Quarterly).unwrap();
        assert!(close(ret, 1.01f64.powi(4) - 1.0, 1e-15));
        assert!(close(ret, 0.0406, 1e-4));
        assert_eq!(vol, 0.0);
    }

    #[test]
    fn annualize_daily_constant() {
        let (ret, vol) = annualize(&[0.0005; 252], Sampling::Daily).unwrap();
        assert!(close(ret, 0.134_246_450_862_571_6, 1e-12));
        assert!(vol.abs() < 1e-15);
    }

    #[test]
    fn annualize_needs_two_points() {
        assert!(matches!(
            annualize(&[0.01], Sampling::Daily),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn sharpe_table_values() {
        assert!(close(sharpe(0.139, 0.089).unwrap(), 1.56, 0.01));
        assert!(close(sharpe(0.142, 0.075).unwrap(), 1.89, 0.01));
        assert_eq!(sharpe(0.0, 0.1).unwrap(), 0.0);
        assert!(matches!(sharpe(0.1, 0.0), Err(Error::Undefined(_))));
    }

    #[test]
    fn sortino_constant_loss_closed_form() {
        let c = 0.01;
        let r = [-c; 8];
        let (ann, _) = annualize(&r, Sampling::Quarterly).unwrap();
        let s = sortino(&r, Sampling::Quarterly).unwrap();
        assert!(close(s, ann / (c * 2.0), 1e-12));
    }

    #[test]
    fn sortino_two_point() {
        let s = sortino(&[0.02, -0.02], Sampling::Daily).unwrap();
        // growth 1.02 * 0.98 = 0.9996 over 2 days; downside sqrt(0.0004 / 2)
        let ann = 0.9996f64.powf(126.0) - 1.0;
        let expected = ann / (0.0002f64.sqrt() * 252f64.sqrt());
        assert!(close(s, expected, 1e-12));
    }

    #[test]
    fn sortino_without_losses_is_undefined() {
        assert!(matches!(
            sortino(&[0.01, 0.02], Sampling::Daily),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn skew_of_symmetric_triplet() {
        let m = skew_kurtosis(&[-0.3, 0.0, 0.3]).unwrap();
        assert!(m.skew.abs() < 1e-12);
        assert_eq!(m.excess_kurtosis, None);
    }

    #[test]
    fn moments_need_three_points_and_variance() {
        assert!(skew_kurtosis(&[0.1, -0.1]).is_err());
        assert!(matches!(skew_kurtosis(&[0.2; 5]), Err(Error::Undefined(_))));
    }

    #[test]
    fn moments_of_large_normal_sample() {
        let x = gaussian(7, 100_000);
        let m = skew_kurtosis(&x).unwrap();
        assert!(m.skew.abs() < 0.1, "skew {}", m.skew);
        assert!(m.excess_kurtosis.unwrap().abs() < 0.1);
    }

    #[test]
    fn drawdown_examples() {
        let dd = drawdown_stats_values(&[100.0, 110.0, 99.0, 105.0]).unwrap();
        assert!(close(dd.max_dd, 0.10, 1e-15));
        assert_eq!(dd.series[0], 0.0);
        assert_eq!(dd.series[1], 0.0);
        assert!(close(dd.series[3], 1.0 - 105.0 / 110.0, 1e-15));

        let dd = drawdown_stats_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((dd.max_dd, dd.worst10_dd), (0.0, 0.0));

        let dd = drawdown_stats_values(&[100.0, 50.0]).unwrap();
        assert_eq!(dd.max_dd, 0.5);
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[0.0, 1.0], 0.9), 0.9);
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert!(close(percentile(&[0.0, 0.0, 0.1, 0.0, 0.05], 0.9), 0.08, 1e-15));
    }

    #[test]
    fn autocorr_alternating_is_minus_one() {
        let x: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 0.01 } else { -0.01 }).collect();
        assert!(close(autocorr(&x, 1).unwrap(), -1.0, 1e-12));
    }

    #[test]
    fn autocorr_of_iid_sample() {
        let x = gaussian(11, 10_000);
        let bound = 3.0 / (x.len() as f64).sqrt();
        assert!(autocorr(&x, 1).unwrap().abs() < bound);
    }

    #[test]
    fn autocorr_lag_out_of_range() {
        assert!(matches!(autocorr(&[0.1, 0.2, 0.3], 3), Err(Error::Precondition(_))));
        assert!(matches!(autocorr(&[0.1, 0.2, 0.3], 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn corr_matrix_examples() {
        let a = series(&[0.01, -0.02, 0.03, 0.0], "2020-01-01");
        let neg = a.map_values(|v| -v).unwrap();
        let labels = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let m = corr_matrix(&labels, &[a.clone(), a.clone(), neg]).unwrap();
        assert!(close(m.entries[0][1], 1.0, 1e-12));
        assert!(close(m.entries[0][2], -1.0, 1e-12));
        assert_eq!(m.get("c", "a"), Some(m.entries[2][0]));

        let flat = series(&[0.01; 4], "2020-01-01");
        assert!(matches!(
            corr_matrix(&labels[..2], &[a, flat]),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn corr_matrix_independent_samples() {
        let n = 20_000;
        let labels = vec!["x".to_string(), "y".to_string()];
        let m = corr_matrix(
            &labels,
            &[
                series(&gaussian(1, n), "2000-01-01"),
                series(&gaussian(2, n), "2000-01-01"),
            ],
        )
        .unwrap();
        assert!(m.entries[0][1].abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn horizons_use_trailing_windows() {
        let x = gaussian(3, 504);
        let y = gaussian(4, 504);
        let (a, b) = (series(&x, "2010-01-01"), series(&y, "2010-01-01"));
        let h = corr_over_horizons(&a, &b, &[Horizon::Y1, Horizon::Y3, Horizon::Lifetime], Sampling::Daily)
            .unwrap();
        let expected_1y = pearson(&x[252..], &y[252..]).unwrap();
        assert_eq!(h.correlations[&Horizon::Y1], expected_1y);
        assert_eq!(h.skipped, vec![Horizon::Y3]);

        let labels = vec!["a".to_string(), "b".to_string()];
        let m = corr_matrix(&labels, &[a.clone(), b]).unwrap();
        assert_eq!(h.correlations[&Horizon::Lifetime], m.entries[0][1]);

        let same = corr_over_horizons(&a, &a, &[Horizon::Y1, Horizon::Lifetime], Sampling::Daily).unwrap();
        assert!(same.correlations.values().all(|c| close(*c, 1.0, 1e-12)));
    }

    #[test]
    fn yearly_returns_examples() {
        assert_eq!(
            yearly_returns(&series(&[0.0; 30], "2020-01-01")).unwrap(),
            BTreeMap::from([(2020, 0.0)])
        );
        let y = yearly_returns(&series(&[0.10, -0.10], "2020-05-01")).unwrap();
        assert!(close(y[&2020], -0.01, 1e-15));
        let y = yearly_returns(&series(&[0.01; 10], "2020-12-27")).unwrap();
        assert_eq!(y.keys().copied().collect::<Vec<_>>(), vec![2020, 2021]);
    }

    #[test]
    fn perf_report_rejects_constant_series() {
        assert!(PerfReport::from_returns(&series(&[0.0; 12], "2020-01-01"), Sampling::Daily).is_err());
    }

    #[test]
    fn perf_report_serializes_flat() {
        let r = series(
            &[0.03, -0.02, 0.05, 0.01, -0.04, 0.02, 0.06, -0.01],
            "2020-01-01",
        );
        let rep = PerfReport::from_returns(&r, Sampling::Quarterly).unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        let obj = json.as_object().unwrap();
        for key in [
            "start_date", "end_date", "annual_return", "annual_vol", "skew", "kurtosis", "sharpe",
            "sortino", "max_dd", "worst10_dd", "ret_over_maxdd", "ret_over_worst10dd",
            "autocorr_lag1", "sampling",
        ] {
            assert!(obj.contains_key(key), "{key}");
        }
        assert_eq!(obj["sampling"], "quarterly");
    }

    fn corr_is_psd(m: &CorrMatrix) -> bool {
        let n = m.entries.len();
        let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| m.entries[i][j]);
        mat.symmetric_eigenvalues().iter().all(|&e| e >= -1e-8)
    }

    proptest! {
        #[test]
        fn worst10_never_exceeds_max(rets in prop::collection::vec(-0.1f64..0.1, 1..200)) {
            let mut nav = vec![1.0];
            for r in &rets { let v = nav.last().unwrap() * (1.0 + r); nav.push(v); }
            let dd = drawdown_stats_values(&nav).unwrap();
            prop_assert!(dd.worst10_dd <= dd.max_dd);
            prop_assert!(dd.max_dd >= 0.0 && dd.max_dd < 1.0);
            let mut peak = f64::MIN;
            for (v, d) in nav.iter().zip(&dd.series) {
                if *v >= peak { peak = *v; prop_assert_eq!(*d, 0.0); }
            }
        }

        #[test]
        fn scale_invariance(rets in prop::collection::vec(-0.05f64..0.05, 8..100), lambda in 0.1f64..5.0) {
            let scaled: Vec<f64> = rets.iter().map(|r| r * lambda).collect();
            if sample_std(&rets) > 1e-6 {
                let (ra, va) = annualize_with(&rets, Sampling::Daily, AnnualizationMode::Arithmetic).unwrap();
                let (rb, vb) = annualize_with(&scaled, Sampling::Daily, AnnualizationMode::Arithmetic).unwrap();
                prop_assert!(close(sharpe(ra, va).unwrap(), sharpe(rb, vb).unwrap(), 1e-10));
                prop_assert!(close(vb, lambda * va, 1e-10));
                let (ma, mb) = (skew_kurtosis(&rets).unwrap(), skew_kurtosis(&scaled).unwrap());
                prop_assert!(close(ma.skew, mb.skew, 1e-10));
                if let (Ok(a), Ok(b)) = (autocorr(&rets, 1), autocorr(&scaled, 1)) {
                    prop_assert!(close(a, b, 1e-10));
                }
                let other: Vec<f64> = rets.iter().rev().copied().collect();
                if let Ok(c) = pearson(&rets, &other) {
                    let cs = pearson(&scaled, &other).unwrap();
                    prop_assert!(close(c, cs, 1e-10));
                }
            }
        }

        #[test]
        fn sharpe_ignores_dates(rets in prop::collection::vec(-0.05f64..0.05, 8..60), shift in 0u64..5000) {
            let a = series(&rets, "2000-01-01");
            let b = a.reindexed(DateIndex::new(a.dates().iter().map(|d| *d + chrono::Days::new(shift)).collect()).unwrap()).unwrap();
            if let (Ok(ra), Ok(rb)) = (PerfReport::from_returns(&a, Sampling::Daily), PerfReport::from_returns(&b, Sampling::Daily)) {
                prop_assert_eq!(ra.sharpe, rb.sharpe);
            }
        }

        #[test]
        fn corr_matrix_hygiene(seed in 0u64..10_000, k in 2usize..6, n in 3usize..60) {
            let labels: Vec<String> = (0..k).map(|i| format!("s{i}")).collect();
            let series: Vec<ValueSeries> = (0..k).map(|i| series(&gaussian(seed * 31 + i as u64, n), "2001-01-01")).collect();
            let m = corr_matrix(&labels, &series).unwrap();
            for i in 0..k {
                prop_assert_eq!(m.entries[i][i], 1.0);
                for j in 0..k {
                    prop_assert_eq!(m.entries[i][j], m.entries[j][i]);
                    prop_assert!(m.entries[i][j].abs() <= 1.0);
                }
            }
            prop_assert!(corr_is_psd(&m));
        }
    }
}
