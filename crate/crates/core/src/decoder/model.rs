use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::belief::{matrix_from_rows, matrix_to_rows, min_eigenvalue, WeightBelief, PSD_TOL, SYMMETRY_TOL};
use crate::error::{Error, Result};

/// Per-asset weight limits used when projecting decoded weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct WeightBounds {
    min: f64,
    max: f64,
}

pub const DEFAULT_BOUNDS: WeightBounds = WeightBounds {
    min: -0.5,
    max: 2.0,
};

impl WeightBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::Config(format!("invalid weight bounds ({min}, {max})")));
        }
        Ok(WeightBounds { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn clamp(&self, w: f64) -> f64 {
        w.clamp(self.min, self.max)
    }
}

impl Default for WeightBounds {
    fn default() -> Self {
        DEFAULT_BOUNDS
    }
}

impl TryFrom<(f64, f64)> for WeightBounds {
    type Error = Error;
    fn try_from((min, max): (f64, f64)) -> Result<Self> {
        WeightBounds::new(min, max)
    }
}

impl From<WeightBounds> for (f64, f64) {
    fn from(b: WeightBounds) -> Self {
        (b.min, b.max)
    }
}

/// Everything the filter consumes: dynamics, noise levels, prior and bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct DecoderModel {
    transition: DMatrix<f64>,
    process_noise: DMatrix<f64>,
    obs_noise: f64,
    initial: WeightBelief,
    bounds: Vec<WeightBounds>,
}

impl DecoderModel {
    pub fn new(
        transition: DMatrix<f64>,
        process_noise: DMatrix<f64>,
        obs_noise: f64,
        initial: WeightBelief,
        bounds: Vec<WeightBounds>,
    ) -> Result<Self> {
        let k = initial.n_assets();
        if transition.shape() != (k, k) || process_noise.shape() != (k, k) {
            return Err(Error::InvalidInput(format!(
                "transition {:?} and process noise {:?} must both be {k}x{k}",
                transition.shape(),
                process_noise.shape()
            )));
        }
        if bounds.len() != k {
            return Err(Error::InvalidInput(format!(
                "{} weight bounds for {k} assets",
                bounds.len()
            )));
        }
        if transition.iter().chain(process_noise.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite model matrix entry".into()));
        }
        if (&process_noise - process_noise.transpose()).amax() > SYMMETRY_TOL
            || min_eigenvalue(&process_noise) < -PSD_TOL
        {
            return Err(Error::InvalidInput(
                "process noise must be symmetric positive semidefinite".into(),
            ));
        }
        if !(obs_noise > 0.0 && obs_noise.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "observation noise variance must be positive, got {obs_noise}"
            )));
        }
        Ok(DecoderModel {
            transition,
            process_noise,
            obs_noise,
            initial,
            bounds,
        })
    }

    /// Random-walk weights (`A = I`, `Q = q I`) with the equal-weight prior and
    /// default bounds.
    pub fn random_walk(k: usize, process_var: f64, obs_noise: f64) -> Result<Self> {
        DecoderModel::new(
            DMatrix::identity(k, k),
            DMatrix::identity(k, k) * process_var,
            obs_noise,
            WeightBelief::equal_weight(k),
            vec![DEFAULT_BOUNDS; k],
        )
    }

    pub fn n_assets(&self) -> usize {
        self.initial.n_assets()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn process_noise(&self) -> &DMatrix<f64> {
        &self.process_noise
    }

    /// Variance of the NAV-return observation noise.
    pub fn obs_noise(&self) -> f64 {
        self.obs_noise
    }

    pub fn initial(&self) -> &WeightBelief {
        &self.initial
    }

    pub fn bounds(&self) -> &[WeightBounds] {
        &self.bounds
    }

    pub fn with_initial(&self, initial: WeightBelief) -> Result<Self> {
        DecoderModel::new(
            self.transition.clone(),
            self.process_noise.clone(),
            self.obs_noise,
            initial,
            self.bounds.clone(),
        )
    }

    pub fn with_bounds(&self, bounds: Vec<WeightBounds>) -> Result<Self> {
        DecoderModel::new(
            self.transition.clone(),
            self.process_noise.clone(),
            self.obs_noise,
            self.initial.clone(),
            bounds,
        )
    }

    pub fn with_noise(&self, process_noise: DMatrix<f64>, obs_noise: f64) -> Result<Self> {
        DecoderModel::new(
            self.transition.clone(),
            process_noise,
            obs_noise,
            self.initial.clone(),
            self.bounds.clone(),
        )
    }

    pub fn with_transition(&self, transition: DMatrix<f64>) -> Result<Self> {
        DecoderModel::new(
            transition,
            self.process_noise.clone(),
            self.obs_noise,
            self.initial.clone(),
            self.bounds.clone(),
        )
    }

    /// Relabels assets; `order[j]` is the source asset of output asset `j`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let k = self.n_assets();
        if order.len() != k {
            return Err(Error::InvalidInput("permutation length mismatch".into()));
        }
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(k, k, |i, j| m[(order[i], order[j])]);
        DecoderModel::new(
            pick(&self.transition),
            pick(&self.process_noise),
            self.obs_noise,
            self.initial.permuted(order),
            order.iter().map(|&i| self.bounds[i]).collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    transition: Vec<Vec<f64>>,
    process_noise: Vec<Vec<f64>>,
    obs_noise: f64,
    initial: WeightBelief,
    bounds: Vec<WeightBounds>,
}

impl TryFrom<ModelFile> for DecoderModel {
    type Error = Error;
    fn try_from(f: ModelFile) -> Result<Self> {
        DecoderModel::new(
            matrix_from_rows(&f.transition, "transition")?,
            matrix_from_rows(&f.process_noise, "process_noise")?,
            f.obs_noise,
            f.initial,
            f.bounds,
        )
        .map_err(|e| Error::Config(e.to_string()))
    }
}

impl From<DecoderModel> for ModelFile {
    fn from(m: DecoderModel) -> Self {
        ModelFile {
            transition: matrix_to_rows(&m.transition),
            process_noise: matrix_to_rows(&m.process_noise),
            obs_noise: m.obs_noise,
            initial: m.initial,
            bounds: m.bounds,
        }
    }
}
