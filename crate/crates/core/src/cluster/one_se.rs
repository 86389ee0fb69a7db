use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of the one-standard-error rule. `k` values are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSe {
    pub k_min: usize,
    pub cutoff: f64,
    pub k_star: usize,
}

/// Smallest `k` whose mean error is within one standard error of the
/// minimum. The minimum itself is the lowest `k` among ties.
pub fn one_se_rule(means: &[f64], ses: &[f64]) -> Result<OneSe> {
    if means.is_empty() {
        return Err(Error::Invalid("one-SE rule needs at least one k".into()));
    }
    if ses.len() != means.len() {
        return Err(Error::Dimension {
            expected: means.len(),
            got: ses.len(),
        });
    }
    if means.iter().chain(ses).any(|v| !v.is_finite()) || ses.iter().any(|&s| s < 0.0) {
        return Err(Error::NonFinite("error curve".into()));
    }
    let mut best = 0;
    for (k, &m) in means.iter().enumerate() {
        if m < means[best] {
            best = k;
        }
    }
    let cutoff = means[best] + ses[best];
    let star = means
        .iter()
        .position(|&m| m <= cutoff)
        .expect("k_min qualifies");
    Ok(OneSe {
        k_min: best + 1,
        cutoff,
        k_star: star + 1,
    })
}

/// Mean and standard error (sample sd over sqrt(n)) of each column of
/// `rows`; a single row gives zero standard errors.
pub fn mean_and_se(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; width];
    let mut se = vec![0.0; width];
    if n == 0 {
        return (mean, se);
    }
    for k in 0..width {
        let m = rows.iter().map(|r| r[k]).sum::<f64>() / n as f64;
        mean[k] = m;
        if n > 1 {
            let ss: f64 = rows.iter().map(|r| (r[k] - m) * (r[k] - m)).sum();
            se[k] = (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt();
        }
    }
    (mean, se)
}
