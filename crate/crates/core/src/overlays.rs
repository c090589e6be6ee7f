//! Tail-hedge and risk-off overlays.
//!
//! The tail hedge reads three indicators off the volatility futures curve
//! (20-day volatility-adjusted momentum of the front future, the ratio of the
//! next future to the current one, and the standardised spot level), maps
//! them through a logistic activation, and when active holds either the front
//! or the fourth-month future depending on the spot level. The risk-off side
//! is a two-threshold hysteresis gate.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{self, DateIndex, SeriesKind, ValueSeries};
use crate::stats;

pub const VOL_FLOOR: f64 = 1e-8;
pub const MOMENTUM_WINDOW: usize = 20;
pub const DEFAULT_SPLIT_LEVEL: f64 = 25.0;
pub const DEFAULT_ZSCORE_WINDOW: usize = 252;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VixCurveSnapshot {
    pub date: NaiveDate,
    /// Front-month future.
    pub st_future: f64,
    /// Fourth-month future.
    pub mt_future: f64,
    pub vix_level: f64,
    /// Second-month future, when the curve file carries one.
    pub next_future: Option<f64>,
}

impl VixCurveSnapshot {
    pub fn new(
        date: NaiveDate,
        st_future: f64,
        mt_future: f64,
        vix_level: f64,
        next_future: Option<f64>,
    ) -> Result<Self> {
        let all = [st_future, mt_future, vix_level, next_future.unwrap_or(1.0)];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(format!("non-positive curve value at {date}")));
        }
        Ok(VixCurveSnapshot {
            date,
            st_future,
            mt_future,
            vix_level,
            next_future,
        })
    }

    /// Next future over the front future. Falls back to the fourth-month
    /// contract when no second-month price is available.
    pub fn curve_ratio(&self) -> f64 {
        curve_ratio(self.next_future.unwrap_or(self.mt_future), self.st_future)
    }
}

pub fn curve_ratio(next_future: f64, current_future: f64) -> f64 {
    next_future / current_future
}

/// Reads a curve file with header `date,st,mt,vix` (optionally `,next`).
pub fn load_vix_curve(path: impl AsRef<Path>) -> Result<Vec<VixCurveSnapshot>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path.display().to_string()))?;
    read_vix_curve(file).map_err(|e| e.in_file(path.display().to_string()))
}

pub fn read_vix_curve<R: std::io::Read>(reader: R) -> Result<Vec<VixCurveSnapshot>> {
    let panel = series::read_panel(reader, SeriesKind::Price)?;
    let names = panel.asset_names();
    let has_next = match names {
        [a, b, c] if a == "st" && b == "mt" && c == "vix" => false,
        [a, b, c, d] if a == "st" && b == "mt" && c == "vix" && d == "next" => true,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `date,st,mt,vix`, got `date,{}`", names.join(",")),
            })
        }
    };
    let cols = panel.columns();
    panel
        .dates()
        .iter()
        .enumerate()
        .map(|(t, &d)| VixCurveSnapshot::new(d, cols[0][t], cols[1][t], cols[2][t], has_next.then(|| cols[3][t])))
        .collect()
}

/// `(p_t / p_{t-w} - 1) / (stdev(daily returns over the window) * sqrt(w))`.
/// The signal is zero when the realised volatility is below [`VOL_FLOOR`].
/// Dates without a full window are skipped.
pub fn vol_adjusted_return(prices: &ValueSeries, window: usize) -> Result<ValueSeries> {
    if prices.kind() == SeriesKind::Return {
        return Err(Error::InvalidInput("momentum signal needs prices".into()));
    }
    if window < 2 {
        return Err(Error::InvalidInput("momentum window must be at least 2".into()));
    }
    let p = prices.values();
    let returns: Vec<f64> = p.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for t in window..p.len() {
        let window_returns = &returns[t - window..t];
        let vol = stats::sample_std(window_returns) * (window as f64).sqrt();
        let signal = if vol < VOL_FLOOR {
            0.0
        } else {
            (p[t] / p[t - window] - 1.0) / vol
        };
        dates.push(prices.dates()[t]);
        values.push(signal);
    }
    ValueSeries::new(DateIndex::new(dates)?, values, SeriesKind::Return)
}

pub fn vol_adjusted_return_20d(prices: &ValueSeries) -> Result<ValueSeries> {
    vol_adjusted_return(prices, MOMENTUM_WINDOW)
}

/// Standardises each point by the mean and sample stdev of the trailing
/// `window` points ending at it; zero when that stdev vanishes.
pub fn rolling_zscore(series: &ValueSeries, window: usize) -> Result<ValueSeries> {
    if window < 2 {
        return Err(Error::InvalidInput("z-score window must be at least 2".into()));
    }
    let v = series.values();
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for t in window.saturating_sub(1)..v.len() {
        let w = &v[t + 1 - window..=t];
        let sd = stats::sample_std(w);
        values.push(if sd > 0.0 { (v[t] - stats::mean(w)) / sd } else { 0.0 });
        dates.push(series.dates()[t]);
    }
    ValueSeries::new(DateIndex::new(dates)?, values, SeriesKind::Return)
}

/// Logistic activation over the three curve indicators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ActivationFile", into = "ActivationFile")]
pub struct ActivationModel {
    coefficients: [f64; 4],
    threshold: f64,
}

#[derive(Serialize, Deserialize)]
struct ActivationFile {
    coefficients: [f64; 4],
    threshold: f64,
}

impl TryFrom<ActivationFile> for ActivationModel {
    type Error = Error;
    fn try_from(f: ActivationFile) -> Result<Self> {
        ActivationModel::new(f.coefficients, f.threshold)
    }
}

impl From<ActivationModel> for ActivationFile {
    fn from(m: ActivationModel) -> Self {
        ActivationFile {
            coefficients: m.coefficients,
            threshold: m.threshold,
        }
    }
}

impl Default for ActivationModel {
    /// Fires on rising front-month momentum, a flat or inverted curve and an
    /// elevated spot level; roughly 10% probability on a calm contango curve.
    fn default() -> Self {
        ActivationModel {
            coefficients: [2.0, 1.5, -4.0, 0.5],
            threshold: 0.5,
        }
    }
}

impl ActivationModel {
    /// `coefficients` = intercept, then loadings on momentum, curve ratio and
    /// standardised level.
    pub fn new(coefficients: [f64; 4], threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::Config(format!("activation threshold must lie in (0, 1), got {threshold}")));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("non-finite activation coefficient".into()));
        }
        Ok(ActivationModel {
            coefficients,
            threshold,
        })
    }

    pub fn coefficients(&self) -> [f64; 4] {
        self.coefficients
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Returns the activation probability and whether it reaches the threshold.
pub fn activation(indicators: [f64; 3], model: &ActivationModel) -> (f64, bool) {
    let c = model.coefficients;
    let z = c[0] + c[1] * indicators[0] + c[2] * indicators[1] + c[3] * indicators[2];
    let p = logistic(z);
    (p, p >= model.threshold)
}

/// Front-month when the spot level is below `split_level` (acute shock),
/// fourth-month otherwise (protracted regime); flat when inactive.
pub fn allocate_st_mt(active: bool, vix_level: f64, split_level: f64) -> (f64, f64) {
    match (active, vix_level < split_level) {
        (false, _) => (0.0, 0.0),
        (true, true) => (1.0, 0.0),
        (true, false) => (0.0, 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct HysteresisConfig {
    theta_high: f64,
    theta_low: f64,
}

impl HysteresisConfig {
    pub fn new(theta_high: f64, theta_low: f64) -> Result<Self> {
        if !(theta_low < theta_high) {
            return Err(Error::Config(format!(
                "hysteresis needs theta_low < theta_high, got ({theta_low}, {theta_high})"
            )));
        }
        Ok(HysteresisConfig {
            theta_high,
            theta_low,
        })
    }

    pub fn theta_high(&self) -> f64 {
        self.theta_high
    }

    pub fn theta_low(&self) -> f64 {
        self.theta_low
    }
}

impl TryFrom<(f64, f64)> for HysteresisConfig {
    type Error = Error;
    fn try_from((high, low): (f64, f64)) -> Result<Self> {
        HysteresisConfig::new(high, low)
    }
}

impl From<HysteresisConfig> for (f64, f64) {
    fn from(c: HysteresisConfig) -> Self {
        (c.theta_high, c.theta_low)
    }
}

/// Two-threshold gate: ON above `theta_high`, OFF below `theta_low`, held in
/// between.
pub fn hysteresis_states(signal: &[f64], cfg: &HysteresisConfig, initial_state: bool) -> Vec<bool> {
    let mut state = initial_state;
    signal
        .iter()
        .map(|&s| {
            if s > cfg.theta_high {
                state = true;
            } else if s < cfg.theta_low {
                state = false;
            }
            state
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlagSeries {
    pub index: DateIndex,
    pub states: Vec<bool>,
}

pub fn hysteresis_filter(signal: &ValueSeries, cfg: &HysteresisConfig, initial_state: bool) -> FlagSeries {
    FlagSeries {
        index: signal.index().clone(),
        states: hysteresis_states(signal.values(), cfg, initial_state),
    }
}

/// `base + overlay_weight * overlay`; the overlay is an unfunded stream.
pub fn overlay_combine(base: &ValueSeries, overlay: &ValueSeries, overlay_weight: f64) -> Result<ValueSeries> {
    if base.index() != overlay.index() {
        return Err(Error::Alignment("base and overlay returns are not aligned".into()));
    }
    if !(overlay_weight >= 0.0 && overlay_weight.is_finite()) {
        return Err(Error::InvalidInput(format!("overlay weight must be non-negative, got {overlay_weight}")));
    }
    ValueSeries::new(
        base.index().clone(),
        base.values()
            .iter()
            .zip(overlay.values())
            .map(|(b, o)| b + overlay_weight * o)
            .collect(),
        SeriesKind::Return,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TailHedgeConfig {
    pub activation: ActivationModel,
    pub split_level: f64,
    pub zscore_window: usize,
    pub momentum_window: usize,
}

impl Default for TailHedgeConfig {
    fn default() -> Self {
        TailHedgeConfig {
            activation: ActivationModel::default(),
            split_level: DEFAULT_SPLIT_LEVEL,
            zscore_window: DEFAULT_ZSCORE_WINDOW,
            momentum_window: MOMENTUM_WINDOW,
        }
    }
}

impl TailHedgeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_level > 0.0) {
            return Err(Error::Config("split level must be positive".into()));
        }
        if self.zscore_window < 2 || self.momentum_window < 2 {
            return Err(Error::Config("overlay windows must be at least 2".into()));
        }
        Ok(())
    }
}

/// Indicators, activation and allocation for one date.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlaySignal {
    pub date: NaiveDate,
    pub momentum: f64,
    pub curve_ratio: f64,
    pub vix_zscore: f64,
    pub probability: f64,
    pub active: bool,
    pub w_st: f64,
    pub w_mt: f64,
}

/// Signals on every date where all three indicators are defined.
pub fn tail_hedge_signals(curve: &[VixCurveSnapshot], cfg: &TailHedgeConfig) -> Result<Vec<OverlaySignal>> {
    cfg.validate()?;
    let st = ValueSeries::from_pairs(curve.iter().map(|s| (s.date, s.st_future)), SeriesKind::Price)?;
    let vix = ValueSeries::from_pairs(curve.iter().map(|s| (s.date, s.vix_level)), SeriesKind::Price)?;
    let momentum = vol_adjusted_return(&st, cfg.momentum_window)?;
    let zscore = rolling_zscore(&vix, cfg.zscore_window)?;
    let common = momentum.index().intersect(zscore.index());
    let momentum = momentum.select(&common)?;
    let zscore = zscore.select(&common)?;
    let by_date = st.index();
    Ok(common
        .dates()
        .iter()
        .enumerate()
        .map(|(i, &date)| {
            let snap = &curve[by_date.position(date).expect("date comes from the curve")];
            let indicators = [momentum.values()[i], snap.curve_ratio(), zscore.values()[i]];
            let (probability, active) = activation(indicators, &cfg.activation);
            let (w_st, w_mt) = allocate_st_mt(active, snap.vix_level, cfg.split_level);
            OverlaySignal {
                date,
                momentum: indicators[0],
                curve_ratio: indicators[1],
                vix_zscore: indicators[2],
                probability,
                active,
                w_st,
                w_mt,
            }
        })
        .collect())
}

/// Overlay returns from holding each date's allocation over the following
/// period of the front and fourth-month futures.
pub fn tail_hedge_returns(curve: &[VixCurveSnapshot], signals: &[OverlaySignal]) -> Result<ValueSeries> {
    let index = DateIndex::new(curve.iter().map(|s| s.date).collect())?;
    let mut out = Vec::new();
    for pair in signals.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let (i0, i1) = (
            index.position(prev.date).ok_or_else(|| Error::Alignment(format!("signal date {} not on curve", prev.date)))?,
            index.position(cur.date).ok_or_else(|| Error::Alignment(format!("signal date {} not on curve", cur.date)))?,
        );
        let (a, b) = (&curve[i0], &curve[i1]);
        let r = prev.w_st * (b.st_future / a.st_future - 1.0) + prev.w_mt * (b.mt_future / a.mt_future - 1.0);
        out.push((cur.date, r));
    }
    ValueSeries::from_pairs(out, SeriesKind::Return)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prices(values: &[f64]) -> ValueSeries {
        let d0 = series::parse_date("2020-01-01").unwrap();
        ValueSeries::from_pairs(
            values.iter().enumerate().map(|(i, &v)| (d0 + chrono::Days::new(i as u64), v)),
            SeriesKind::Price,
        )
        .unwrap()
    }

    #[test]
    fn momentum_constant_prices_is_zero() {
        let s = vol_adjusted_return_20d(&prices(&[20.0; 30])).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn momentum_needs_21_points() {
        assert!(vol_adjusted_return_20d(&prices(&[20.0; 20])).unwrap().is_empty());
        assert_eq!(vol_adjusted_return_20d(&prices(&[20.0; 21])).unwrap().len(), 1);
    }

    #[test]
    fn momentum_sign_follows_trend() {
        let up: Vec<f64> = (0..25).map(|i| 15.0 + i as f64 * 0.3 + if i % 2 == 0 { 0.1 } else { 0.0 }).collect();
        let s = vol_adjusted_return_20d(&prices(&up)).unwrap();
        assert!(s.values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn momentum_geometric_growth_hits_vol_floor() {
        // identical daily returns: zero realised vol, so the floor branch applies
        let p: Vec<f64> = (0..21).map(|i| 100.0 * 1.01f64.powi(i)).collect();
        let s = vol_adjusted_return_20d(&prices(&p)).unwrap();
        assert_eq!(s.values(), &[0.0]);
    }

    #[test]
    fn momentum_window_oracle() {
        // alternating +2% / -1% daily moves
        let mut p = vec![100.0];
        for i in 0..20 {
            let last: f64 = *p.last().unwrap();
            p.push(last * if i % 2 == 0 { 1.02 } else { 0.99 });
        }
        let s = vol_adjusted_return_20d(&prices(&p)).unwrap();
        let total = 1.02f64.powi(10) * 0.99f64.powi(10) - 1.0;
        // ten returns at 0.02 and ten at -0.01: mean 0.005, deviations +-0.015
        let sd = (20.0 * 0.015f64.powi(2) / 19.0).sqrt();
        let expected = total / (sd * 20f64.sqrt());
        assert!((s.values()[0] - expected).abs() < 1e-12, "{} vs {expected}", s.values()[0]);
    }

    #[test]
    fn curve_ratio_examples() {
        assert_eq!(curve_ratio(20.0, 16.0), 1.25);
        assert_eq!(curve_ratio(18.0, 18.0), 1.0);
        assert!((curve_ratio(14.0, 20.0) - 0.7).abs() < 1e-15);
        let d = series::parse_date("2020-03-16").unwrap();
        let snap = VixCurveSnapshot::new(d, 20.0, 25.0, 30.0, None).unwrap();
        assert_eq!(snap.curve_ratio(), 1.25);
        let snap = VixCurveSnapshot::new(d, 20.0, 25.0, 30.0, Some(22.0)).unwrap();
        assert_eq!(snap.curve_ratio(), 1.1);
        assert!(VixCurveSnapshot::new(d, 0.0, 25.0, 30.0, None).is_err());
    }

    #[test]
    fn activation_examples() {
        let zero = ActivationModel::new([0.0; 4], 0.5).unwrap();
        assert_eq!(activation([0.3, 1.2, -2.0], &zero), (0.5, true));
        let huge = ActivationModel::new([1e6, 0.0, 0.0, 0.0], 0.5).unwrap();
        assert_eq!(activation([0.0; 3], &huge).0, 1.0);
        let m = ActivationModel::new([1.0, 1.0, 1.0, 0.0], 0.7).unwrap();
        let (p, active) = activation([0.2, 0.1, 0.3], &m);
        assert!((p - logistic(1.3)).abs() < 1e-15);
        assert!(active);
    }

    #[test]
    fn activation_reference_vector() {
        // loadings (1, 1, 1) on indicators (0.2, 0.1, 0.3) with zero intercept
        let m = ActivationModel::new([0.0, 1.0, 1.0, 1.0], 0.5).unwrap();
        let (p, _) = activation([0.2, 0.1, 0.3], &m);
        assert!((p - 0.645_656_306_225_795).abs() < 1e-12);
    }

    #[test]
    fn threshold_must_be_open_unit() {
        assert!(ActivationModel::new([0.0; 4], 1.0).is_err());
        assert!(ActivationModel::new([0.0; 4], 0.0).is_err());
    }

    #[test]
    fn allocation_rules() {
        assert_eq!(allocate_st_mt(false, 40.0, 25.0), (0.0, 0.0));
        assert_eq!(allocate_st_mt(true, 18.0, 25.0), (1.0, 0.0));
        assert_eq!(allocate_st_mt(true, 30.0, 25.0), (0.0, 1.0));
    }

    #[test]
    fn hysteresis_trace() {
        let cfg = HysteresisConfig::new(0.7, 0.3).unwrap();
        assert_eq!(hysteresis_states(&[0.5, 0.8, 0.5, 0.2], &cfg, false), vec![false, true, true, false]);
        assert!(hysteresis_states(&[0.1, 0.2, 0.0], &cfg, true).iter().all(|s| !s));
        assert!(hysteresis_states(&[0.4, 0.6, 0.5], &cfg, true).iter().all(|s| *s));
        assert!(hysteresis_states(&[0.4, 0.6, 0.5], &cfg, false).iter().all(|s| !s));
        assert!(HysteresisConfig::new(0.3, 0.7).is_err());
    }

    #[test]
    fn overlay_combine_examples() {
        let idx = prices(&[1.0, 1.0]).index().clone();
        let base = ValueSeries::new(idx.clone(), vec![0.02, -0.01], SeriesKind::Return).unwrap();
        let overlay = ValueSeries::new(idx, vec![-0.01, 0.03], SeriesKind::Return).unwrap();
        assert_eq!(overlay_combine(&base, &overlay, 0.0).unwrap().values(), base.values());
        let neg = base.map_values(|v| -v).unwrap();
        assert!(overlay_combine(&base, &neg, 1.0).unwrap().values().iter().all(|v| *v == 0.0));
        assert!((overlay_combine(&base, &overlay, 0.5).unwrap().values()[0] - 0.015).abs() < 1e-15);
        let shifted = overlay.tail(1);
        assert!(matches!(overlay_combine(&base, &shifted, 1.0), Err(Error::Alignment(_))));
    }

    #[test]
    fn curve_file_parsing() {
        let csv = "date,st,mt,vix\n2020-01-02,14,16,13\n2020-01-03,15,16.5,14\n";
        let curve = read_vix_curve(csv.as_bytes()).unwrap();
        assert_eq!(curve.len(), 2);
        assert_eq!(curve[1].mt_future, 16.5);
        assert!(read_vix_curve("date,a,b,c\n2020-01-02,1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn tail_hedge_end_to_end() {
        let d0 = series::parse_date("2019-01-01").unwrap();
        let curve: Vec<VixCurveSnapshot> = (0..80)
            .map(|i| {
                let shock = if i > 50 { 1.0 + 0.05 * (i - 50) as f64 } else { 1.0 + 0.01 * ((i % 5) as f64) };
                VixCurveSnapshot::new(d0 + chrono::Days::new(i), 15.0 * shock, 17.0 * shock.sqrt(), 14.0 * shock, None)
                    .unwrap()
            })
            .collect();
        let cfg = TailHedgeConfig {
            zscore_window: 30,
            ..Default::default()
        };
        let signals = tail_hedge_signals(&curve, &cfg).unwrap();
        assert_eq!(signals.len(), 80 - 29);
        assert!(signals.iter().any(|s| s.active));
        for s in &signals {
            assert!(s.w_st + s.w_mt == if s.active { 1.0 } else { 0.0 });
        }
        let rets = tail_hedge_returns(&curve, &signals).unwrap();
        assert_eq!(rets.len(), signals.len() - 1);
        assert!(rets.values().iter().sum::<f64>() > 0.0);
    }

    fn switches(states: &[bool], initial: bool) -> usize {
        let mut prev = initial;
        states.iter().filter(|&&s| std::mem::replace(&mut prev, s) != s).count()
    }

    fn crossings(signal: &[f64], cfg: &HysteresisConfig) -> usize {
        let side = |x: f64, th: f64| x > th;
        signal
            .windows(2)
            .map(|w| {
                usize::from(side(w[0], cfg.theta_high) != side(w[1], cfg.theta_high))
                    + usize::from(side(w[0], cfg.theta_low) != side(w[1], cfg.theta_low))
            })
            .sum()
    }

    proptest! {
        #[test]
        fn no_chatter(signal in prop::collection::vec(0.0f64..1.0, 1..200), lo in 0.0f64..0.5, gap in 0.01f64..0.5, init: bool) {
            let cfg = HysteresisConfig::new(lo + gap, lo).unwrap();
            let states = hysteresis_states(&signal, &cfg, init);
            // switches after the first sample can only happen on a threshold crossing
            prop_assert!(switches(&states[1..], states[0]) <= crossings(&signal, &cfg));
        }

        #[test]
        fn wider_band_switches_less(signal in prop::collection::vec(0.0f64..1.0, 1..200), lo in 0.1f64..0.5, gap in 0.01f64..0.3, widen_lo in 0.0f64..0.1, widen_hi in 0.0f64..0.2, init: bool) {
            let narrow = HysteresisConfig::new(lo + gap, lo).unwrap();
            let wide = HysteresisConfig::new(lo + gap + widen_hi, lo - widen_lo).unwrap();
            let n = switches(&hysteresis_states(&signal, &narrow, init), init);
            let w = switches(&hysteresis_states(&signal, &wide, init), init);
            prop_assert!(w <= n);
        }

        #[test]
        fn activation_monotone(x in prop::collection::vec(-3.0f64..3.0, 3), c in prop::collection::vec(0.01f64..2.0, 4), which in 0usize..3, bump in 0.01f64..1.0) {
            let m = ActivationModel::new([c[0], c[1], c[2], c[3]], 0.5).unwrap();
            let base = [x[0], x[1], x[2]];
            let mut up = base;
            up[which] += bump;
            prop_assert!(activation(up, &m).0 > activation(base, &m).0);
        }

        #[test]
        fn allocation_is_binary(active: bool, level in 1.0f64..80.0, split in 1.0f64..80.0) {
            let (s, m) = allocate_st_mt(active, level, split);
            prop_assert!((s == 0.0 || s == 1.0) && (m == 0.0 || m == 1.0));
            prop_assert!(s + m == 0.0 || s + m == 1.0);
        }

        #[test]
        fn combine_linear_in_weight(b in prop::collection::vec(-0.05f64..0.05, 3), o in prop::collection::vec(-0.05f64..0.05, 3), w1 in 0.0f64..2.0, w2 in 0.0f64..2.0) {
            let idx = prices(&[1.0; 3]).index().clone();
            let base = ValueSeries::new(idx.clone(), b, SeriesKind::Return).unwrap();
            let ov = ValueSeries::new(idx, o, SeriesKind::Return).unwrap();
            let c1 = overlay_combine(&base, &ov, w1).unwrap();
            let c2 = overlay_combine(&base, &ov, w2).unwrap();
            let c12 = overlay_combine(&base, &ov, w1 + w2).unwrap();
            for i in 0..3 {
                let lhs = c12.values()[i] - base.values()[i];
                let rhs = (c1.values()[i] - base.values()[i]) + (c2.values()[i] - base.values()[i]);
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }
}
