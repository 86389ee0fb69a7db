//! Leaf averages over a fixed, user-supplied partition of feature space.

use serde::{Deserialize, Serialize};

use super::{check_inputs, FittedModel, LearnerSpec, ModelParams, TrainingRows};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Half-open box `lower <= x < upper` per coordinate; `None` is unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

impl AxisBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(j, &v)| {
            self.lower[j].map_or(true, |lo| v >= lo) && self.upper[j].map_or(true, |hi| v < hi)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafPartition {
    pub boxes: Vec<AxisBox>,
}

impl LeafPartition {
    /// Intervals of one coordinate of a `dim`-dimensional space cut at the
    /// ascending points `cuts`: `(-inf, c0), [c0, c1), ..., [c_last, inf)`.
    pub fn intervals(dim: usize, feature: usize, cuts: &[f64]) -> Result<Self> {
        if feature >= dim {
            return Err(Error::Dimension {
                expected: dim,
                got: feature + 1,
            });
        }
        if cuts.windows(2).any(|w| !(w[0] < w[1])) || cuts.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid(
                "interval cuts must be finite and strictly increasing".into(),
            ));
        }
        let mut bounds: Vec<Option<f64>> = vec![None];
        bounds.extend(cuts.iter().copied().map(Some));
        bounds.push(None);
        let boxes = bounds
            .windows(2)
            .map(|w| {
                let mut lower = vec![None; dim];
                let mut upper = vec![None; dim];
                lower[feature] = w[0];
                upper[feature] = w[1];
                AxisBox { lower, upper }
            })
            .collect();
        Ok(LeafPartition { boxes })
    }

    pub fn n_leaves(&self) -> usize {
        self.boxes.len()
    }

    /// The unique box containing `x`; `None` when no box or several do.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut found = None;
        for (k, b) in self.boxes.iter().enumerate() {
            if b.lower.len() != x.len() {
                return None;
            }
            if b.contains(x) {
                if found.is_some() {
                    return None;
                }
                found = Some(k);
            }
        }
        found
    }
}

pub(super) fn fit_params(
    partition: &LeafPartition,
    x: &Matrix,
    y: &[f64],
    rows: &TrainingRows,
) -> Result<ModelParams> {
    let k = partition.n_leaves();
    let mut sw = vec![0.0; k];
    let mut swy = vec![0.0; k];
    let mut total_w = 0.0;
    let mut total_wy = 0.0;
    for i in 0..x.rows() {
        let leaf = partition
            .locate(x.row(i))
            .ok_or(Error::OutsidePartition(i))?;
        let w = rows.weights[i];
        sw[leaf] += w;
        swy[leaf] += w * y[i];
        total_w += w;
        total_wy += w * y[i];
    }
    let global = total_wy / total_w;
    let means = sw
        .iter()
        .zip(&swy)
        .map(|(&w, &wy)| if w > 0.0 { wy / w } else { global })
        .collect();
    Ok(ModelParams::FixedPartitionMean {
        partition: partition.clone(),
        means,
    })
}

/// Per-leaf weighted means; leaves without training weight predict the
/// global weighted mean.
pub fn fit_fixed_partition_mean(
    partition: &LeafPartition,
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
) -> Result<FittedModel> {
    let rows = check_inputs(x, y, weights)?;
    let params = fit_params(partition, x, y, &rows)?;
    Ok(FittedModel {
        spec: LearnerSpec::fixed_partition(partition.clone()),
        n_features: x.cols(),
        params,
    })
}
