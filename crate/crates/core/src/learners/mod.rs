//! Base learners behind one weighted fit/predict contract.
//!
//! Every learner accepts optional nonnegative row weights; rows with zero
//! weight are dropped before fitting, so they have no influence at all.

mod forest;
mod partition;
mod ridge;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use partition::{fit_fixed_partition_mean, AxisBox, LeafPartition};
pub use tree::{Node, Tree};

/// Version of the JSON model document written by [`FittedModel::to_json`].
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Ridge,
    Tree,
    Forest,
    FixedPartitionMean,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Ridge => "ridge",
            LearnerKind::Tree => "tree",
            LearnerKind::Forest => "forest",
            LearnerKind::FixedPartitionMean => "fixed_partition_mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub ridge_penalty: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub n_trees: usize,
    /// Fraction of features tried at each forest split; `None` means
    /// `ceil(sqrt(d)) / d`.
    pub feature_subsample: Option<f64>,
    /// Bootstrap draws per tree as a fraction of the row count.
    pub row_subsample: f64,
    pub seed_salt: u64,
    /// Required when `kind` is `fixed_partition_mean`.
    pub partition: Option<LeafPartition>,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec {
            kind: LearnerKind::Ridge,
            ridge_penalty: 1e-6,
            max_depth: 6,
            min_leaf: 5,
            n_trees: 100,
            feature_subsample: None,
            row_subsample: 1.0,
            seed_salt: 0,
            partition: None,
        }
    }
}

impl LearnerSpec {
    pub fn ridge(penalty: f64) -> Self {
        LearnerSpec {
            kind: LearnerKind::Ridge,
            ridge_penalty: penalty,
            ..Self::default()
        }
    }

    pub fn tree(max_depth: usize, min_leaf: usize) -> Self {
        LearnerSpec {
            kind: LearnerKind::Tree,
            max_depth,
            min_leaf,
            ..Self::default()
        }
    }

    pub fn forest(n_trees: usize, max_depth: usize, min_leaf: usize) -> Self {
        LearnerSpec {
            kind: LearnerKind::Forest,
            n_trees,
            max_depth,
            min_leaf,
            ..Self::default()
        }
    }

    pub fn fixed_partition(partition: LeafPartition) -> Self {
        LearnerSpec {
            kind: LearnerKind::FixedPartitionMean,
            partition: Some(partition),
            ..Self::default()
        }
    }

    pub fn with_salt(mut self, seed_salt: u64) -> Self {
        self.seed_salt = seed_salt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ridge_penalty >= 0.0 && self.ridge_penalty.is_finite()) {
            return Err(Error::config("ridge_penalty", "must be finite and >= 0"));
        }
        if self.min_leaf < 1 {
            return Err(Error::config("min_leaf", "must be >= 1"));
        }
        if self.n_trees < 1 {
            return Err(Error::config("n_trees", "must be >= 1"));
        }
        if let Some(f) = self.feature_subsample {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::config("feature_subsample", "must lie in (0, 1]"));
            }
        }
        if !(self.row_subsample > 0.0 && self.row_subsample <= 1.0) {
            return Err(Error::config("row_subsample", "must lie in (0, 1]"));
        }
        if self.kind == LearnerKind::FixedPartitionMean && self.partition.is_none() {
            return Err(Error::config(
                "partition",
                "required for fixed_partition_mean",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Ridge {
        coefficients: Vec<f64>,
        intercept: f64,
    },
    Tree {
        tree: Tree,
    },
    Forest {
        trees: Vec<Tree>,
    },
    FixedPartitionMean {
        partition: LeafPartition,
        means: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: LearnerSpec,
    pub n_features: usize,
    pub params: ModelParams,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    model: FittedModel,
}

impl FittedModel {
    pub fn kind(&self) -> LearnerKind {
        self.spec.kind
    }

    /// Prediction for one feature vector of the training dimension.
    pub fn predict_row(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(match &self.params {
            ModelParams::Ridge {
                coefficients,
                intercept,
            } => intercept + coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>(),
            ModelParams::Tree { tree } => tree.predict_row(x),
            ModelParams::Forest { trees } => {
                trees.iter().map(|t| t.predict_row(x)).sum::<f64>() / trees.len() as f64
            }
            ModelParams::FixedPartitionMean { partition, means } => {
                let leaf = partition.locate(x).ok_or(Error::OutsidePartition(0))?;
                means[leaf]
            }
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features && x.rows() > 0 {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.cols(),
            });
        }
        (0..x.rows())
            .map(|i| {
                self.predict_row(x.row(i)).map_err(|e| match e {
                    Error::OutsidePartition(_) => Error::OutsidePartition(i),
                    other => other,
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Invalid("model document lacks format_version".into()))?;
        if found != u64::from(MODEL_FORMAT_VERSION) {
            return Err(Error::Version {
                found: found as u32,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let doc: ModelDocument = serde_json::from_value(value)?;
        Ok(doc.model)
    }
}

/// Validated training rows: the indices with positive weight and the weight
/// of every row (ones when none were given).
pub(crate) struct TrainingRows {
    pub active: Vec<usize>,
    pub weights: Vec<f64>,
}

pub(crate) fn check_inputs(x: &Matrix, y: &[f64], weights: Option<&[f64]>) -> Result<TrainingRows> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::Empty("no training rows".into()));
    }
    if y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("training features".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training targets".into()));
    }
    let weights = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: w.len(),
                });
            }
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Weights(
                    "weights must be finite and nonnegative".into(),
                ));
            }
            w.to_vec()
        }
        None => vec![1.0; n],
    };
    let active: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    if active.is_empty() {
        return Err(Error::Weights("all weights are zero".into()));
    }
    Ok(TrainingRows { active, weights })
}

/// Fits `spec` to `(x, y)` with optional row weights.
pub fn fit(
    spec: &LearnerSpec,
    x: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
) -> Result<FittedModel> {
    spec.validate()?;
    let rows = check_inputs(x, y, weights)?;
    let params = match spec.kind {
        LearnerKind::Ridge => ridge::fit(spec.ridge_penalty, x, y, &rows)?,
        LearnerKind::Tree => ModelParams::Tree {
            tree: tree::fit(x, y, &rows.weights, &rows.active, spec),
        },
        LearnerKind::Forest => forest::fit(spec, x, y, &rows),
        LearnerKind::FixedPartitionMean => {
            let partition = spec.partition.as_ref().expect("validated");
            partition::fit_params(partition, x, y, &rows)?
        }
    };
    Ok(FittedModel {
        spec: spec.clone(),
        n_features: x.cols(),
        params,
    })
}

pub fn predict(model: &FittedModel, x: &Matrix) -> Result<Vec<f64>> {
    model.predict(x)
}
