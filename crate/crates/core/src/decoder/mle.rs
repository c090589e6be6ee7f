use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::filter::run_aligned;
use super::model::DecoderModel;
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::series::{self, PricePanel, SeriesKind, ValueSeries};

/// How the process noise enters the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessNoiseParam {
    /// Kept at the template value.
    #[default]
    Fixed,
    /// One log-scale multiplying the template's shape.
    Scalar,
    /// One log-variance per asset; off-diagonal terms are dropped.
    Diagonal,
}

/// Which model scalars the likelihood fit may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainableMask {
    pub process_noise: ProcessNoiseParam,
    /// Log observation-noise variance.
    pub obs_noise: bool,
    /// A single additive coupling on every off-diagonal transition entry.
    pub transition_coupling: bool,
}

impl TrainableMask {
    pub fn none() -> Self {
        TrainableMask::default()
    }

    /// Scalar process-noise scale plus observation noise.
    pub fn noise_scales() -> Self {
        TrainableMask {
            process_noise: ProcessNoiseParam::Scalar,
            obs_noise: true,
            transition_coupling: false,
        }
    }

    pub fn n_scalars(&self, n_assets: usize) -> usize {
        let q = match self.process_noise {
            ProcessNoiseParam::Fixed => 0,
            ProcessNoiseParam::Scalar => 1,
            ProcessNoiseParam::Diagonal => n_assets,
        };
        q + usize::from(self.obs_noise) + usize::from(self.transition_coupling)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Initial simplex step for log-variance parameters.
    pub log_step: f64,
    /// Initial simplex step for the transition coupling.
    pub coupling_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 400,
            log_step: 1.0,
            coupling_step: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: DecoderModel,
    pub loglik: f64,
    pub template_loglik: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Set when the optimizer stopped on its iteration budget.
    pub warning: Option<String>,
}

// Log-variances are confined to [1e-20, e^5]; beyond that the likelihood
// of near-exact data diverges without telling us anything.
const LOG_VAR_MIN: f64 = -46.0;
const LOG_VAR_MAX: f64 = 5.0;
const UNSET_VARIANCE: f64 = 1e-6;

struct Parameterization<'a> {
    template: &'a DecoderModel,
    mask: TrainableMask,
    q_shape: DMatrix<f64>,
}

fn log_var(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        UNSET_VARIANCE.ln()
    }
}

fn var_from_log(theta: f64) -> f64 {
    theta.clamp(LOG_VAR_MIN, LOG_VAR_MAX).exp()
}

impl<'a> Parameterization<'a> {
    fn new(template: &'a DecoderModel, mask: TrainableMask) -> Self {
        let k = template.n_assets();
        let q = template.process_noise();
        let scale = q.trace() / k as f64;
        let q_shape = if scale > 0.0 {
            q / scale
        } else {
            DMatrix::identity(k, k)
        };
        Parameterization {
            template,
            mask,
            q_shape,
        }
    }

    fn initial(&self, opts: &FitOptions) -> (Vec<f64>, Vec<f64>) {
        let k = self.template.n_assets();
        let q = self.template.process_noise();
        let mut x = Vec::new();
        let mut steps = Vec::new();
        match self.mask.process_noise {
            ProcessNoiseParam::Fixed => {}
            ProcessNoiseParam::Scalar => {
                x.push(log_var(q.trace() / k as f64));
                steps.push(opts.log_step);
            }
            ProcessNoiseParam::Diagonal => {
                for i in 0..k {
                    x.push(log_var(q[(i, i)]));
                    steps.push(opts.log_step);
                }
            }
        }
        if self.mask.obs_noise {
            x.push(log_var(self.template.obs_noise()));
            steps.push(opts.log_step);
        }
        if self.mask.transition_coupling {
            x.push(0.0);
            steps.push(opts.coupling_step);
        }
        (x, steps)
    }

    fn model(&self, theta: &[f64]) -> Result<DecoderModel> {
        let k = self.template.n_assets();
        let mut it = theta.iter().copied();
        let process_noise = match self.mask.process_noise {
            ProcessNoiseParam::Fixed => self.template.process_noise().clone(),
            ProcessNoiseParam::Scalar => &self.q_shape * var_from_log(it.next().unwrap()),
            ProcessNoiseParam::Diagonal => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_fn(k, |_, _| var_from_log(it.next().unwrap())))
            }
        };
        let obs_noise = if self.mask.obs_noise {
            var_from_log(it.next().unwrap())
        } else {
            self.template.obs_noise()
        };
        let mut transition = self.template.transition().clone();
        if self.mask.transition_coupling {
            let c = it.next().unwrap();
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        transition[(i, j)] += c;
                    }
                }
            }
        }
        self.template
            .with_noise(process_noise, obs_noise)?
            .with_transition(transition)
    }
}

/// Maximises the filter log-likelihood over the trainable scalars. The
/// returned model never scores below the template on the fitting data.
pub fn fit_mle(
    panel: &PricePanel,
    nav_returns: &ValueSeries,
    template: &DecoderModel,
    mask: TrainableMask,
    opts: &FitOptions,
) -> Result<FitOutcome> {
    if panel.kind() != SeriesKind::Return || nav_returns.kind() != SeriesKind::Return {
        return Err(Error::InvalidInput("fitting needs return series".into()));
    }
    if panel.n_assets() != template.n_assets() {
        return Err(Error::InvalidInput(format!(
            "panel has {} assets, model has {}",
            panel.n_assets(),
            template.n_assets()
        )));
    }
    let (panel, nav) = series::align_panel(panel, nav_returns)?;
    let n_params = mask.n_scalars(template.n_assets());
    let template_loglik = run_aligned(&panel, &nav, template, |_, _, _| {})?;
    if n_params == 0 {
        return Ok(FitOutcome {
            model: template.clone(),
            loglik: template_loglik,
            template_loglik,
            iterations: 0,
            evaluations: 0,
            converged: true,
            warning: None,
        });
    }
    if nav.len() < 10 * n_params {
        return Err(Error::Precondition(format!(
            "{} training points for {n_params} trainable scalars; need at least {}",
            nav.len(),
            10 * n_params
        )));
    }

    let params = Parameterization::new(template, mask);
    let (x0, steps) = params.initial(opts);
    let objective = |theta: &[f64]| match params.model(theta) {
        Ok(model) => run_aligned(&panel, &nav, &model, |_, _, _| {}).map_or(f64::INFINITY, |ll| -ll),
        Err(_) => f64::INFINITY,
    };
    let nm_opts = NelderMeadOptions {
        max_iterations: opts.max_iterations,
        ..Default::default()
    };
    let min = nelder_mead(objective, &x0, &steps, &nm_opts);
    let warning = (!min.converged).then(|| {
        format!(
            "likelihood fit stopped after {} iterations without converging; using best parameters found",
            min.iterations
        )
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    let (model, loglik) = if -min.fx >= template_loglik {
        (params.model(&min.x)?, -min.fx)
    } else {
        (template.clone(), template_loglik)
    };
    Ok(FitOutcome {
        model,
        loglik,
        template_loglik,
        iterations: min.iterations,
        evaluations: min.evaluations,
        converged: min.converged,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::DateIndex;

    fn tiny_data(n: usize) -> (PricePanel, ValueSeries) {
        let d0 = series::parse_date("2018-01-01").unwrap();
        let idx = DateIndex::new((0..n).map(|i| d0 + chrono::Days::new(i as u64)).collect()).unwrap();
        let col: Vec<f64> = (0..n).map(|i| 0.01 * ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let y: Vec<f64> = col.iter().enumerate().map(|(i, r)| 0.7 * r + 1e-4 * ((i % 3) as f64 - 1.0)).collect();
        (
            PricePanel::new(idx.clone(), vec!["a".into()], vec![col], SeriesKind::Return).unwrap(),
            ValueSeries::new(idx, y, SeriesKind::Return).unwrap(),
        )
    }

    #[test]
    fn empty_mask_returns_template() {
        let (panel, nav) = tiny_data(30);
        let template = DecoderModel::random_walk(1, 1e-5, 1e-6).unwrap();
        let fit = fit_mle(&panel, &nav, &template, TrainableMask::none(), &FitOptions::default()).unwrap();
        assert_eq!(fit.model, template);
        assert_eq!(fit.loglik, fit.template_loglik);
    }

    #[test]
    fn short_window_rejected() {
        let (panel, nav) = tiny_data(15);
        let template = DecoderModel::random_walk(1, 1e-5, 1e-6).unwrap();
        let err = fit_mle(&panel, &nav, &template, TrainableMask::noise_scales(), &FitOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn fit_improves_likelihood() {
        let (panel, nav) = tiny_data(60);
        let template = DecoderModel::random_walk(1, 1e-2, 1e-2).unwrap();
        let mask = TrainableMask {
            process_noise: ProcessNoiseParam::Diagonal,
            obs_noise: true,
            transition_coupling: false,
        };
        let fit = fit_mle(&panel, &nav, &template, mask, &FitOptions::default()).unwrap();
        assert!(fit.loglik > fit.template_loglik);
        assert!(fit.model.obs_noise() < 1e-2);
    }

    #[test]
    fn iteration_budget_yields_warning() {
        let (panel, nav) = tiny_data(60);
        let template = DecoderModel::random_walk(1, 1e-2, 1e-2).unwrap();
        let opts = FitOptions {
            max_iterations: 2,
            ..Default::default()
        };
        let fit = fit_mle(&panel, &nav, &template, TrainableMask::noise_scales(), &opts).unwrap();
        assert!(!fit.converged);
        assert!(fit.warning.is_some());
        assert!(fit.loglik >= fit.template_loglik);
    }

    #[test]
    fn scalar_count() {
        let mask = TrainableMask {
            process_noise: ProcessNoiseParam::Diagonal,
            obs_noise: true,
            transition_coupling: true,
        };
        assert_eq!(mask.n_scalars(4), 6);
        assert_eq!(TrainableMask::noise_scales().n_scalars(4), 2);
    }
}
