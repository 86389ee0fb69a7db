//! Clustered transfer residual learning.
//!
//! A pooled base model is fit over every source with a one-hot source
//! indicator, then per-source residual models correct it. Clustered residual
//! learning replaces each source's residual model with one trained on a
//! data-driven cluster of similar sources, found by repeated binary subset
//! selection and a one-standard-error cutoff over cluster size.
//!
//! Modules:
//! - [`dataset`]: data model, CSV I/O, stratified splits, synthetic generator.
//! - [`learners`]: ridge, regression tree, random forest and fixed-partition means.
//! - [`pipeline`]: global, local, residual and clustered-residual predictors.
//! - [`cluster`]: subset selection, stability weights and cluster selection.
//! - [`baselines`]: source re-weighting and just-train-twice.
//! - [`eval`]: MSE, small-source MSE, rank-weighted average and average ranks.
//! - [`shift`]: Monte Carlo check of the random distribution shift excess risk.
//! - [`bench`]: run configuration and the end-to-end benchmark driver.

pub mod baselines;
pub mod bench;
pub mod cluster;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod learners;
pub mod matrix;
mod par;
pub mod pipeline;
pub mod seed;
pub mod shift;

pub use error::{Error, Result};
pub use matrix::Matrix;
