use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::belief::WeightBelief;
use super::model::WeightBounds;

pub const DEFAULT_NORM_GROWTH_LIMIT: f64 = 3.0;

/// Element-wise clamp into the bounds. No renormalisation: whatever the
/// weights do not cover is implicitly held in cash.
pub fn project_weights(mean: &[f64], bounds: &[WeightBounds]) -> Vec<f64> {
    mean.iter().zip(bounds).map(|(w, b)| b.clamp(*w)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SanityFlag {
    /// Unprojected weight at or beyond one of its bounds.
    Bound {
        date: NaiveDate,
        asset: usize,
        weight: f64,
        min: f64,
        max: f64,
    },
    /// Euclidean norm of the weight vector grew by more than the limit.
    NormJump {
        date: NaiveDate,
        previous_norm: f64,
        norm: f64,
    },
}

impl SanityFlag {
    pub fn date(&self) -> NaiveDate {
        match self {
            SanityFlag::Bound { date, .. } | SanityFlag::NormJump { date, .. } => *date,
        }
    }
}

/// Flags dates where the decoded weights touch or cross their bounds, or
/// where the weight norm jumps by more than `norm_growth_limit` times.
pub fn sanity_check(
    dates: &[NaiveDate],
    beliefs: &[WeightBelief],
    bounds: &[WeightBounds],
    norm_growth_limit: f64,
) -> Vec<SanityFlag> {
    let mut flags = Vec::new();
    let mut previous_norm: Option<f64> = None;
    for (&date, belief) in dates.iter().zip(beliefs) {
        for (asset, (&weight, b)) in belief.mean().iter().zip(bounds).enumerate() {
            if weight <= b.min() || weight >= b.max() {
                flags.push(SanityFlag::Bound {
                    date,
                    asset,
                    weight,
                    min: b.min(),
                    max: b.max(),
                });
            }
        }
        let norm = belief.mean().norm();
        if let Some(prev) = previous_norm {
            if prev > 0.0 && norm > norm_growth_limit * prev {
                flags.push(SanityFlag::NormJump {
                    date,
                    previous_norm: prev,
                    norm,
                });
            }
        }
        previous_norm = Some(norm);
    }
    flags
}
