use std::f64::consts::PI;

use nalgebra::DVector;

use super::belief::{repair_psd, symmetrize, WeightBelief};
use super::constraints::{project_weights, sanity_check, SanityFlag, DEFAULT_NORM_GROWTH_LIMIT};
use super::model::DecoderModel;
use crate::error::{Error, Result};
use crate::series::{self, DateIndex, PricePanel, SeriesKind, ValueSeries};

/// Propagates a belief through the weight dynamics: `A m`, `A P A' + Q`.
pub fn predict_step(belief: &WeightBelief, model: &DecoderModel) -> Result<WeightBelief> {
    let a = model.transition();
    let mean = a * belief.mean();
    let mut cov = a * belief.cov() * a.transpose() + model.process_noise();
    symmetrize(&mut cov);
    if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("prediction produced non-finite values".into()));
    }
    Ok(WeightBelief::from_parts(mean, cov))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub belief: WeightBelief,
    /// Observed minus predicted NAV return.
    pub innovation: f64,
    pub innovation_var: f64,
}

/// Conditions a belief on one NAV return observed through the asset returns
/// of the same period.
pub fn correct_step(
    belief: &WeightBelief,
    asset_returns: &[f64],
    observed_nav_return: f64,
    model: &DecoderModel,
) -> Result<Correction> {
    if asset_returns.len() != belief.n_assets() {
        return Err(Error::InvalidInput(format!(
            "{} asset returns for a {}-asset belief",
            asset_returns.len(),
            belief.n_assets()
        )));
    }
    if asset_returns.iter().any(|r| !r.is_finite()) || !observed_nav_return.is_finite() {
        return Err(Error::InvalidInput("non-finite observation".into()));
    }
    let r = DVector::from_column_slice(asset_returns);
    let cov = belief.cov();
    let cov_r = cov * &r;
    let innovation = observed_nav_return - r.dot(belief.mean());
    let innovation_var = r.dot(&cov_r) + model.obs_noise();
    if !(innovation_var > 0.0 && innovation_var.is_finite()) {
        return Err(Error::DegenerateObservation(innovation_var));
    }
    let gain = &cov_r / innovation_var;
    let mean = belief.mean() + &gain * innovation;
    let cov = repair_psd(cov - &gain * cov_r.transpose());
    if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("correction produced non-finite values".into()));
    }
    Ok(Correction {
        belief: WeightBelief::from_parts(mean, cov),
        innovation,
        innovation_var,
    })
}

/// Output of one filtering pass.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub asset_names: Vec<String>,
    /// Posterior belief after each date's observation.
    pub beliefs: Vec<WeightBelief>,
    /// Projected prior mean applied to each date's asset returns.
    pub applied_weights: Vec<Vec<f64>>,
    pub innovations: Vec<f64>,
    pub innovation_vars: Vec<f64>,
    /// `w_{t-1}' r_t` with the projected weights.
    pub replicated_returns: ValueSeries,
    /// Replicated NAV compounded from 1.0.
    pub replicated_nav: ValueSeries,
    pub loglik: f64,
    pub flags: Vec<SanityFlag>,
}

impl DecodeResult {
    pub fn index(&self) -> &DateIndex {
        self.replicated_returns.index()
    }

    pub fn terminal(&self) -> &WeightBelief {
        self.beliefs.last().expect("filter output is never empty")
    }

    /// Posterior weight means, one column per asset.
    pub fn weights_panel(&self) -> Result<PricePanel> {
        let k = self.asset_names.len();
        let columns = (0..k)
            .map(|j| self.beliefs.iter().map(|b| b.mean()[j]).collect())
            .collect();
        PricePanel::new(self.index().clone(), self.asset_names.clone(), columns, SeriesKind::Return)
    }

    pub fn standardized_innovations(&self) -> Vec<f64> {
        self.innovations
            .iter()
            .zip(&self.innovation_vars)
            .map(|(v, s)| v / s.sqrt())
            .collect()
    }
}

fn check_inputs(panel: &PricePanel, nav_returns: &ValueSeries, model: &DecoderModel) -> Result<()> {
    if panel.kind() != SeriesKind::Return || nav_returns.kind() != SeriesKind::Return {
        return Err(Error::InvalidInput("filtering needs return series".into()));
    }
    if panel.n_assets() != model.n_assets() {
        return Err(Error::InvalidInput(format!(
            "panel has {} assets, model has {}",
            panel.n_assets(),
            model.n_assets()
        )));
    }
    Ok(())
}

fn observation_loglik(innovation: f64, innovation_var: f64) -> f64 {
    -0.5 * ((2.0 * PI * innovation_var).ln() + innovation * innovation / innovation_var)
}

/// Runs predict/correct over inputs already sharing one index. The visitor
/// sees the prior and the correction of every date.
pub(crate) fn run_aligned(
    panel: &PricePanel,
    nav_returns: &ValueSeries,
    model: &DecoderModel,
    mut visit: impl FnMut(usize, &WeightBelief, &Correction),
) -> Result<f64> {
    let mut belief = model.initial().clone();
    let mut loglik = 0.0;
    let mut row = vec![0.0; panel.n_assets()];
    for (t, (date, y)) in nav_returns.iter().enumerate() {
        for (slot, col) in row.iter_mut().zip(panel.columns()) {
            *slot = col[t];
        }
        let prior = predict_step(&belief, model).map_err(|e| e.at(date))?;
        let corr = correct_step(&prior, &row, y, model).map_err(|e| e.at(date))?;
        loglik += observation_loglik(corr.innovation, corr.innovation_var);
        visit(t, &prior, &corr);
        belief = corr.belief;
    }
    Ok(loglik)
}

/// Gaussian log-likelihood of the NAV returns under `model`, without
/// collecting the per-date output.
pub fn log_likelihood(panel: &PricePanel, nav_returns: &ValueSeries, model: &DecoderModel) -> Result<f64> {
    check_inputs(panel, nav_returns, model)?;
    let (panel, nav) = series::align_panel(panel, nav_returns)?;
    run_aligned(&panel, &nav, model, |_, _, _| {})
}

/// Decodes asset weights from NAV returns by alternating prediction and
/// correction over every common date.
pub fn filter(panel: &PricePanel, nav_returns: &ValueSeries, model: &DecoderModel) -> Result<DecodeResult> {
    check_inputs(panel, nav_returns, model)?;
    let (panel, nav) = series::align_panel(panel, nav_returns)?;
    let n = nav.len();
    let mut beliefs = Vec::with_capacity(n);
    let mut applied_weights = Vec::with_capacity(n);
    let mut innovations = Vec::with_capacity(n);
    let mut innovation_vars = Vec::with_capacity(n);
    let mut replicated = Vec::with_capacity(n);
    let loglik = run_aligned(&panel, &nav, model, |t, prior, corr| {
        let w = project_weights(prior.mean().as_slice(), model.bounds());
        replicated.push(panel.columns().iter().zip(&w).map(|(c, w)| c[t] * w).sum());
        applied_weights.push(w);
        beliefs.push(corr.belief.clone());
        innovations.push(corr.innovation);
        innovation_vars.push(corr.innovation_var);
    })?;
    let replicated_returns = ValueSeries::new(nav.index().clone(), replicated, SeriesKind::Return)?;
    let replicated_nav = series::nav_from_returns(&replicated_returns, 1.0)?;
    let flags = sanity_check(nav.dates(), &beliefs, model.bounds(), DEFAULT_NORM_GROWTH_LIMIT);
    Ok(DecodeResult {
        asset_names: panel.asset_names().to_vec(),
        beliefs,
        applied_weights,
        innovations,
        innovation_vars,
        replicated_returns,
        replicated_nav,
        loglik,
        flags,
    })
}
