//! Bagged regression trees with per-split feature subsampling.
//!
//! Tree `t` draws its bootstrap sample and feature subsets from a seed
//! derived from `(seed_salt, t)`, so trees can be grown in any order.

use super::{tree, LearnerSpec, ModelParams, TrainingRows};
use crate::matrix::Matrix;
use crate::{par, seed};

pub(super) fn mtry(spec: &LearnerSpec, d: usize) -> usize {
    let frac = spec
        .feature_subsample
        .unwrap_or_else(|| (d as f64).sqrt().ceil() / d as f64);
    ((frac * d as f64 - 1e-9).ceil() as usize).clamp(1, d)
}

pub(super) fn fit(spec: &LearnerSpec, x: &Matrix, y: &[f64], rows: &TrainingRows) -> ModelParams {
    let d = x.cols();
    let m = mtry(spec, d);
    let n_active = rows.active.len();
    let draws = ((spec.row_subsample * n_active as f64).round() as usize).max(1);
    let trees = par::map_indexed(spec.n_trees, |t| {
        let mut rng = seed::rng(seed::derive(spec.seed_salt, "forest-tree", &[t.into()]));
        let mut counts = vec![0u32; n_active];
        for _ in 0..draws {
            counts[rand::Rng::random_range(&mut rng, 0..n_active)] += 1;
        }
        // Bootstrap multiplicity enters as a weight factor.
        let mut w = vec![0.0; x.rows()];
        let mut active = Vec::with_capacity(n_active);
        for (k, &i) in rows.active.iter().enumerate() {
            if counts[k] > 0 {
                w[i] = rows.weights[i] * f64::from(counts[k]);
                active.push(i);
            }
        }
        tree::fit_with(x, y, &w, &active, spec, Some(m), Some(&mut rng))
    });
    ModelParams::Forest { trees }
}

#[cfg(test)]
mod tests {
    use super::super::{fit as fit_model, LearnerSpec, ModelParams};
    use super::*;

    fn data(seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = seed::rng(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..80 {
            let a: f64 = rand::Rng::random_range(&mut rng, -2.0..2.0);
            let b: f64 = rand::Rng::random_range(&mut rng, -2.0..2.0);
            let e: f64 = rand::Rng::random_range(&mut rng, -1.0..1.0);
            rows.push(vec![a, b, a * b]);
            y.push(a + (b > 0.0) as u8 as f64 + e);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn default_mtry_is_ceil_sqrt() {
        let spec = LearnerSpec::forest(1, 3, 1);
        assert_eq!(mtry(&spec, 20), 5);
        assert_eq!(mtry(&spec, 1), 1);
        assert_eq!(mtry(&spec, 40), 7);
    }

    #[test]
    fn deterministic_in_salt() {
        let (x, y) = data(1);
        let spec = LearnerSpec::forest(10, 4, 2).with_salt(3);
        assert_eq!(
            fit_model(&spec, &x, &y, None).unwrap(),
            fit_model(&spec, &x, &y, None).unwrap()
        );
        let other = fit_model(&spec.clone().with_salt(4), &x, &y, None).unwrap();
        assert_ne!(fit_model(&spec, &x, &y, None).unwrap(), other);
    }

    #[test]
    fn identical_members_match_single_tree() {
        let (x, y) = data(2);
        let model = fit_model(&LearnerSpec::tree(3, 2), &x, &y, None).unwrap();
        let ModelParams::Tree { tree } = model.params.clone() else {
            unreachable!()
        };
        let mut forest = model.clone();
        forest.spec = LearnerSpec::forest(7, 3, 2);
        forest.params = ModelParams::Forest {
            trees: vec![tree; 7],
        };
        let a = model.predict(&x).unwrap();
        let b = forest.predict(&x).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
        }
    }

    #[test]
    fn more_trees_reduce_prediction_variance_across_seeds() {
        let (x, y) = data(3);
        let probe = [0.3, -0.4, -0.12];
        let spread = |n_trees: usize| {
            let preds: Vec<f64> = (0..30)
                .map(|s| {
                    fit_model(
                        &LearnerSpec::forest(n_trees, 6, 1).with_salt(s),
                        &x,
                        &y,
                        None,
                    )
                    .unwrap()
                    .predict_row(&probe)
                    .unwrap()
                })
                .collect();
            let mean = preds.iter().sum::<f64>() / preds.len() as f64;
            preds.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (preds.len() - 1) as f64
        };
        assert!(spread(64) < spread(1));
    }
}
