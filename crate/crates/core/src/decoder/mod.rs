//! Linear-Gaussian state-space decoding of a NAV series into latent asset
//! weights.
//!
//! The latent state is the weight vector `w` applied to the asset returns of
//! the coming period. It evolves as `w_t = A w_{t-1} + q_t`, `q_t ~ N(0, Q)`,
//! and each observed NAV return is `y_t = r_t' w_t + e_t`, `e_t ~ N(0, s2)`,
//! the first-order form of compounding the weighted asset returns onto the
//! previous NAV. Inference is exact Gaussian message passing along the chain:
//! a prediction step through the dynamics followed by a correction step on
//! each new observation. Full `A` and `Q` let assets interact.

mod belief;
mod constraints;
mod filter;
mod mle;
mod model;

pub use belief::{repair_psd, WeightBelief, PSD_TOL, SYMMETRY_TOL};
pub use constraints::{project_weights, sanity_check, SanityFlag, DEFAULT_NORM_GROWTH_LIMIT};
pub use filter::{correct_step, filter, log_likelihood, predict_step, Correction, DecodeResult};
pub use mle::{fit_mle, FitOptions, FitOutcome, ProcessNoiseParam, TrainableMask};
pub use model::{DecoderModel, WeightBounds, DEFAULT_BOUNDS};
