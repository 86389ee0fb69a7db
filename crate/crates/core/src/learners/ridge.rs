//! Weighted ridge regression with an unpenalized intercept.
//!
//! Weights are rescaled to mean one over the active rows, so the fit does not
//! depend on their overall scale. The penalized normal equations are formed
//! on weighted-centered data and solved by Cholesky factorization.

use super::{ModelParams, TrainingRows};
use crate::error::{Error, Result};
use crate::matrix::{cholesky_solve, Matrix};

pub(super) fn fit(penalty: f64, x: &Matrix, y: &[f64], rows: &TrainingRows) -> Result<ModelParams> {
    let d = x.cols();
    let active = &rows.active;
    let raw_total: f64 = active.iter().map(|&i| rows.weights[i]).sum();
    let norm = raw_total / active.len() as f64;
    let w: Vec<f64> = active.iter().map(|&i| rows.weights[i] / norm).collect();
    let total: f64 = w.iter().sum();

    let mut x_mean = vec![0.0; d];
    let mut y_mean = 0.0;
    for (k, &i) in active.iter().enumerate() {
        for (m, v) in x_mean.iter_mut().zip(x.row(i)) {
            *m += w[k] * v;
        }
        y_mean += w[k] * y[i];
    }
    for m in &mut x_mean {
        *m /= total;
    }
    y_mean /= total;
    let first = x.row(active[0]);
    let constant: Vec<bool> = (0..d)
        .map(|a| active.iter().all(|&i| x.get(i, a) == first[a]))
        .collect();
    for a in 0..d {
        if constant[a] {
            x_mean[a] = first[a];
        }
    }

    let mut gram = vec![0.0; d * d];
    let mut rhs = vec![0.0; d];
    let mut centered = vec![0.0; d];
    for (k, &i) in active.iter().enumerate() {
        for ((c, v), m) in centered.iter_mut().zip(x.row(i)).zip(&x_mean) {
            *c = v - m;
        }
        let wy = w[k] * (y[i] - y_mean);
        for a in 0..d {
            rhs[a] += centered[a] * wy;
            let wa = w[k] * centered[a];
            if wa == 0.0 {
                continue;
            }
            for b in a..d {
                gram[a * d + b] += wa * centered[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            gram[a * d + b] = gram[b * d + a];
        }
        gram[a * d + a] += penalty;
    }

    // Columns that are constant over the active rows carry no information;
    // they get a zero coefficient instead of making the system singular.
    let live: Vec<usize> = (0..d).filter(|&a| !constant[a]).collect();
    let mut coefficients = vec![0.0; d];
    if !live.is_empty() {
        let k = live.len();
        let mut sub = vec![0.0; k * k];
        let mut sub_rhs = vec![0.0; k];
        for (p, &a) in live.iter().enumerate() {
            sub_rhs[p] = rhs[a];
            for (q, &b) in live.iter().enumerate() {
                sub[p * k + q] = gram[a * d + b];
            }
        }
        let beta = cholesky_solve(&sub, &sub_rhs, k).ok_or_else(|| {
            Error::Singular("ridge normal equations (raise ridge_penalty)".into())
        })?;
        for (p, &a) in live.iter().enumerate() {
            coefficients[a] = beta[p];
        }
    }
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_mean)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    Ok(ModelParams::Ridge {
        coefficients,
        intercept,
    })
}
