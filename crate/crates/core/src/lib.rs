//! Decoding of daily fund NAVs into latent asset weights.
//!
//! The crate is organised bottom-up:
//!
//! - [`series`]: dated containers, alignment, resampling and CSV ingestion.
//! - [`stats`]: annualised performance, drawdown and correlation statistics.
//! - [`asymmetry`]: the negative-return shrinkage transform.
//! - [`decoder`]: a linear-Gaussian state-space model over portfolio weights,
//!   filtered by prediction-correction and fitted by maximum likelihood.
//! - [`overlays`]: volatility-curve activation signals, hysteresis filtering
//!   and overlay combination.
//! - [`pipeline`]: end-to-end orchestration, synthetic scenarios and reports.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymmetry;
pub mod decoder;
pub mod error;
pub mod optim;
pub mod overlays;
pub mod pipeline;
pub mod series;
pub mod stats;

pub use error::{Error, Result};
