use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::decoder::{WeightBounds, DEFAULT_BOUNDS};
use crate::error::{Error, Result};
use crate::series::{DateIndex, PricePanel, SeriesKind, ValueSeries};

/// Parameters of a synthetic decoding problem with known weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub assets: usize,
    pub days: usize,
    /// Per-step stdev of the weight random walk.
    pub weight_vol: f64,
    /// Stdev of the Gaussian noise added to each NAV return.
    pub obs_noise: f64,
    /// Daily stdev of every asset return.
    pub asset_vol: f64,
    /// Pairwise correlation between asset returns.
    pub asset_corr: f64,
    pub bounds: WeightBounds,
    pub start_date: NaiveDate,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            assets: 4,
            days: 1000,
            weight_vol: 1e-3,
            obs_noise: 1e-4,
            asset_vol: 0.01,
            asset_corr: 0.2,
            bounds: DEFAULT_BOUNDS,
            start_date: NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.assets == 0 {
            return Err(Error::Config("scenario needs at least one asset".into()));
        }
        if self.days < 2 {
            return Err(Error::Config("scenario needs at least two days".into()));
        }
        if !(self.weight_vol >= 0.0 && self.obs_noise >= 0.0 && self.asset_vol > 0.0) {
            return Err(Error::Config("scenario volatilities must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.asset_corr) {
            return Err(Error::Config("asset correlation must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    /// Asset price levels from 100, one row more than the return series.
    pub prices: PricePanel,
    pub asset_returns: PricePanel,
    /// Fund NAV from 100.
    pub nav: ValueSeries,
    /// Exact NAV returns, `w_t' r_t + noise`.
    pub nav_returns: ValueSeries,
    /// Weight applied to each date's asset returns.
    pub true_weights: PricePanel,
}

pub fn asset_name(k: usize) -> String {
    const NAMES: [&str; 4] = ["Eq", "Fx", "Ir", "Co"];
    NAMES
        .get(k)
        .map_or_else(|| format!("A{}", k + 1), |s| s.to_string())
}

fn weekdays(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date overflow");
    }
    out
}

fn reflect(mut w: f64, b: &WeightBounds) -> f64 {
    // a few reflections suffice for any sane step size
    for _ in 0..8 {
        if w > b.max() {
            w = 2.0 * b.max() - w;
        } else if w < b.min() {
            w = 2.0 * b.min() - w;
        } else {
            return w;
        }
    }
    b.clamp(w)
}

/// Builds a deterministic scenario: equicorrelated Gaussian asset returns,
/// bounded random-walk weights reflected at the bounds, and a NAV compounded
/// from the weighted returns plus observation noise.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let (k, t) = (cfg.assets, cfg.days);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let mut weights: Vec<f64> = Vec::with_capacity(k);
    let lo = cfg.bounds.min().max(0.1);
    let hi = cfg.bounds.max().min(0.6).max(lo);
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    for _ in 0..k {
        weights.push(init_rng.random_range(lo..=hi));
    }

    let dates = weekdays(cfg.start_date, t + 1);
    let (common_load, idio_load) = (cfg.asset_corr.sqrt(), (1.0 - cfg.asset_corr).sqrt());
    let mut returns = vec![Vec::with_capacity(t); k];
    let mut true_w = vec![Vec::with_capacity(t); k];
    let mut nav_returns = Vec::with_capacity(t);
    for step in 0..t {
        if step > 0 {
            for w in weights.iter_mut() {
                *w = reflect(*w + cfg.weight_vol * normal(), &cfg.bounds);
            }
        }
        let common = normal();
        let mut y = 0.0;
        for j in 0..k {
            let r = cfg.asset_vol * (common_load * common + idio_load * normal());
            returns[j].push(r);
            true_w[j].push(weights[j]);
            y += weights[j] * r;
        }
        nav_returns.push(y + cfg.obs_noise * normal());
    }

    let mut prices = vec![Vec::with_capacity(t + 1); k];
    for (col, rets) in prices.iter_mut().zip(&returns) {
        col.push(100.0);
        for r in rets {
            let last = *col.last().unwrap();
            col.push(last * (1.0 + r));
        }
    }
    let mut nav = Vec::with_capacity(t + 1);
    nav.push(100.0);
    for y in &nav_returns {
        let last = *nav.last().unwrap();
        nav.push(last * (1.0 + y));
    }

    let names: Vec<String> = (0..k).map(asset_name).collect();
    let level_index = DateIndex::new(dates.clone())?;
    let return_index = DateIndex::new(dates[1..].to_vec())?;
    Ok(Scenario {
        prices: PricePanel::new(level_index.clone(), names.clone(), prices, SeriesKind::Price)?,
        asset_returns: PricePanel::new(return_index.clone(), names.clone(), returns, SeriesKind::Return)?,
        nav: ValueSeries::new(level_index, nav, SeriesKind::Nav)?,
        nav_returns: ValueSeries::new(return_index.clone(), nav_returns, SeriesKind::Return)?,
        true_weights: PricePanel::new(return_index, names, true_w, SeriesKind::Return)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            seed,
            assets: 3,
            days: 200,
            ..Default::default()
        }
    }

    #[test]
    fn zero_weight_vol_keeps_weights_constant() {
        let s = generate_scenario(&ScenarioConfig {
            weight_vol: 0.0,
            ..small(3)
        })
        .unwrap();
        for col in s.true_weights.columns() {
            assert!(col.iter().all(|w| *w == col[0]));
        }
    }

    #[test]
    fn same_seed_same_output() {
        let a = generate_scenario(&small(42)).unwrap();
        let b = generate_scenario(&small(42)).unwrap();
        assert_eq!(a.prices, b.prices);
        assert_eq!(a.nav, b.nav);
        assert_eq!(a.true_weights, b.true_weights);
        let c = generate_scenario(&small(43)).unwrap();
        assert_ne!(a.nav, c.nav);
    }

    #[test]
    fn noiseless_nav_is_exact_weighted_sum() {
        let s = generate_scenario(&ScenarioConfig {
            obs_noise: 0.0,
            ..small(8)
        })
        .unwrap();
        for t in 0..s.nav_returns.len() {
            let y: f64 = (0..3)
                .map(|j| s.true_weights.columns()[j][t] * s.asset_returns.columns()[j][t])
                .sum();
            assert_eq!(s.nav_returns.values()[t], y);
        }
    }

    #[test]
    fn weights_respect_bounds_and_dates_skip_weekends() {
        let s = generate_scenario(&ScenarioConfig {
            weight_vol: 0.2,
            bounds: WeightBounds::new(0.0, 1.0).unwrap(),
            ..small(5)
        })
        .unwrap();
        for col in s.true_weights.columns() {
            assert!(col.iter().all(|w| (0.0..=1.0).contains(w)));
        }
        assert!(s
            .nav
            .dates()
            .iter()
            .all(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)));
        assert_eq!(s.prices.len(), 201);
        assert_eq!(s.asset_returns.asset_names(), &["Eq", "Fx", "Ir"]);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(generate_scenario(&ScenarioConfig { assets: 0, ..small(1) }).is_err());
        assert!(generate_scenario(&ScenarioConfig { days: 1, ..small(1) }).is_err());
    }
}
