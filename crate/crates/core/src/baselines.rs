//! Comparison methods: equal-mass source re-weighting (RWG) and
//! just-train-twice (JTT) adapted to squared error.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::LearnerSpec;
use crate::pipeline::{train_global, train_global_weighted, Family, Predictor};

/// Row weights giving every source the same total mass `n / |M|`.
pub fn rwg_weights(ds: &Dataset) -> Vec<f64> {
    let n = ds.n_rows() as f64;
    let occupied = (0..ds.n_sources())
        .filter(|&p| ds.source_size(p) > 0)
        .count() as f64;
    ds.row_source()
        .iter()
        .map(|&p| n / (occupied * ds.source_size(p) as f64))
        .collect()
}

pub fn train_rwg(ds: &Dataset, spec: &LearnerSpec) -> Result<Predictor> {
    train_global_weighted(ds, spec, &rwg_weights(ds), Family::Rwg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JttConfig {
    /// Fraction of rows, by largest squared first-pass residual, that form the error set.
    pub error_fraction: f64,
    /// Weight given to error-set rows in the second pass.
    pub upweight: f64,
}

impl Default for JttConfig {
    fn default() -> Self {
        JttConfig {
            error_fraction: 0.2,
            upweight: 5.0,
        }
    }
}

impl JttConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.error_fraction > 0.0 && self.error_fraction < 1.0) {
            return Err(Error::config("error_fraction", "must lie in (0, 1)"));
        }
        if !(self.upweight >= 1.0 && self.upweight.is_finite()) {
            return Err(Error::config("upweight", "must be finite and >= 1"));
        }
        if self.error_fraction * (n as f64) < 1.0 {
            return Err(Error::config(
                "error_fraction",
                "error_fraction * n must be at least 1",
            ));
        }
        Ok(())
    }

    /// Size of the error set for `n` rows.
    pub fn error_set_size(&self, n: usize) -> usize {
        ((self.error_fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
    }
}

/// Second-pass weights: `upweight` on the rows with the largest squared
/// residuals (ties by lower row index), 1 elsewhere.
pub fn jtt_weights(residuals: &[f64], cfg: &JttConfig) -> Vec<f64> {
    let n = residuals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (residuals[a] * residuals[a], residuals[b] * residuals[b]);
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut w = vec![1.0; n];
    for &i in &order[..cfg.error_set_size(n)] {
        w[i] = cfg.upweight;
    }
    w
}

/// Global fit, then a refit with the high-error rows upweighted.
pub fn train_jtt(ds: &Dataset, spec: &LearnerSpec, cfg: &JttConfig) -> Result<Predictor> {
    cfg.validate(ds.n_rows())?;
    let first = train_global(ds, spec)?;
    let pred = first.predict_own(ds)?;
    let residuals: Vec<f64> = pred.iter().zip(ds.outcome()).map(|(p, y)| y - p).collect();
    train_global_weighted(ds, spec, &jtt_weights(&residuals, cfg), Family::Jtt)
}
