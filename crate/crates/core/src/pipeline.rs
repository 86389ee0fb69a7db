//! Predictors assembled from base learners.
//!
//! Global-shaped families (global, RWG, JTT) fit one model on pooled rows
//! whose features carry a one-hot source indicator. Local fits one model per
//! source on that source's rows. TRL adds to the pooled base a per-source
//! model of the base residuals `y - base(x, own source)`; CTRL trains each
//! source's residual model on the residual rows of a whole cluster of sources.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{self, FittedModel, LearnerSpec, MODEL_FORMAT_VERSION};
use crate::matrix::Matrix;
use crate::{par, seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Global,
    Local,
    Trl,
    Ctrl,
    Rwg,
    Jtt,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Global,
        Family::Local,
        Family::Trl,
        Family::Ctrl,
        Family::Rwg,
        Family::Jtt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Global => "global",
            Family::Local => "local",
            Family::Trl => "trl",
            Family::Ctrl => "ctrl",
            Family::Rwg => "rwg",
            Family::Jtt => "jtt",
        }
    }
}

/// Source id → sources whose rows train that source's residual model.
pub type ClusterMap = BTreeMap<String, Vec<String>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    pub family: Family,
    /// Source universe, lexicographic.
    pub sources: Vec<String>,
    pub n_features: usize,
    /// Pooled model over `features ++ one_hot(source)`; absent for local.
    pub base: Option<FittedModel>,
    /// Per-source models indexed like `sources`: local models for the local
    /// family, residual models for TRL and CTRL, empty otherwise.
    pub per_source: Vec<FittedModel>,
    pub clusters: Option<ClusterMap>,
}

#[derive(Serialize, Deserialize)]
struct PredictorDocument {
    format_version: u32,
    predictor: Predictor,
}

/// Seed salt for the pooled base model.
pub fn base_salt(spec: &LearnerSpec) -> u64 {
    seed::derive(spec.seed_salt, "base", &[])
}

/// Seed salt for the residual model owned by `source`.
pub fn residual_salt(spec: &LearnerSpec, source: &str) -> u64 {
    seed::derive(spec.seed_salt, "residual", &[source.into()])
}

fn local_salt(spec: &LearnerSpec, source: &str) -> u64 {
    seed::derive(spec.seed_salt, "local", &[source.into()])
}

/// `features[rows] ++ one_hot(source of row)`.
pub(crate) fn augmented(ds: &Dataset, rows: &[usize]) -> Matrix {
    let hot: Vec<usize> = rows.iter().map(|&i| ds.row_source()[i]).collect();
    ds.features()
        .select_rows(rows)
        .with_one_hot(&hot, ds.n_sources())
}

/// Fits the pooled model on `rows` of `ds`.
pub(crate) fn fit_base(
    ds: &Dataset,
    rows: &[usize],
    spec: &LearnerSpec,
    salt: u64,
    weights: Option<&[f64]>,
) -> Result<FittedModel> {
    let x = augmented(ds, rows);
    let y: Vec<f64> = rows.iter().map(|&i| ds.outcome()[i]).collect();
    learners::fit(&spec.clone().with_salt(salt), &x, &y, weights)
}

/// Evaluates a pooled model at `x` as if every row belonged to source `pos`.
pub(crate) fn base_at(
    base: &FittedModel,
    x: &[f64],
    pos: usize,
    n_sources: usize,
    buf: &mut Vec<f64>,
) -> Result<f64> {
    buf.clear();
    buf.extend_from_slice(x);
    buf.resize(x.len() + n_sources, 0.0);
    buf[x.len() + pos] = 1.0;
    base.predict_row(buf)
}

/// `y_i - base(x_i, own source)` for each listed row, in order.
pub(crate) fn base_residuals(ds: &Dataset, base: &FittedModel, rows: &[usize]) -> Result<Vec<f64>> {
    let mut buf = Vec::with_capacity(ds.n_features() + ds.n_sources());
    rows.iter()
        .map(|&i| {
            let b = base_at(
                base,
                ds.features().row(i),
                ds.row_source()[i],
                ds.n_sources(),
                &mut buf,
            )?;
            Ok(ds.outcome()[i] - b)
        })
        .collect()
}

fn fit_global_shaped(
    ds: &Dataset,
    spec: &LearnerSpec,
    weights: Option<&[f64]>,
    family: Family,
) -> Result<Predictor> {
    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    let base = fit_base(ds, &rows, spec, base_salt(spec), weights)?;
    Ok(Predictor {
        family,
        sources: ds.sources().to_vec(),
        n_features: ds.n_features(),
        base: Some(base),
        per_source: Vec::new(),
        clusters: None,
    })
}

/// One model on all rows, with the source as a one-hot feature.
pub fn train_global(ds: &Dataset, spec: &LearnerSpec) -> Result<Predictor> {
    fit_global_shaped(ds, spec, None, Family::Global)
}

/// Global-shaped fit with row weights, tagged with `family`.
pub fn train_global_weighted(
    ds: &Dataset,
    spec: &LearnerSpec,
    weights: &[f64],
    family: Family,
) -> Result<Predictor> {
    if weights.len() != ds.n_rows() {
        return Err(Error::Dimension {
            expected: ds.n_rows(),
            got: weights.len(),
        });
    }
    fit_global_shaped(ds, spec, Some(weights), family)
}

/// An independent model per source on that source's rows only.
pub fn train_local(ds: &Dataset, spec: &LearnerSpec) -> Result<Predictor> {
    ds.require_min_source_size(2)?;
    let fits = par::map_indexed(ds.n_sources(), |pos| {
        let rows = ds.rows_of(pos);
        let x = ds.features().select_rows(rows);
        let y: Vec<f64> = rows.iter().map(|&i| ds.outcome()[i]).collect();
        let salt = local_salt(spec, &ds.sources()[pos]);
        learners::fit(&spec.clone().with_salt(salt), &x, &y, None)
    });
    Ok(Predictor {
        family: Family::Local,
        sources: ds.sources().to_vec(),
        n_features: ds.n_features(),
        base: None,
        per_source: fits.into_iter().collect::<Result<_>>()?,
        clusters: None,
    })
}

/// Residual model for `owner` fit on `rows` (ascending) with residual targets.
pub(crate) fn fit_residual(
    ds: &Dataset,
    rows: &[usize],
    residual_of_row: &dyn Fn(usize) -> f64,
    spec: &LearnerSpec,
    salt: u64,
) -> Result<FittedModel> {
    let x = ds.features().select_rows(rows);
    let r: Vec<f64> = rows.iter().map(|&i| residual_of_row(i)).collect();
    learners::fit(&spec.clone().with_salt(salt), &x, &r, None)
}

fn train_residual_family(
    ds: &Dataset,
    base_spec: &LearnerSpec,
    resid_spec: &LearnerSpec,
    cluster_rows: &[Vec<usize>],
    family: Family,
    clusters: Option<ClusterMap>,
) -> Result<Predictor> {
    let all: Vec<usize> = (0..ds.n_rows()).collect();
    let base = fit_base(ds, &all, base_spec, base_salt(base_spec), None)?;
    let residuals = base_residuals(ds, &base, &all)?;
    let lookup = |i: usize| residuals[i];
    let fits = par::map_indexed(ds.n_sources(), |pos| {
        fit_residual(
            ds,
            &cluster_rows[pos],
            &lookup,
            resid_spec,
            residual_salt(resid_spec, &ds.sources()[pos]),
        )
    });
    Ok(Predictor {
        family,
        sources: ds.sources().to_vec(),
        n_features: ds.n_features(),
        base: Some(base),
        per_source: fits.into_iter().collect::<Result<_>>()?,
        clusters,
    })
}

/// Pooled base plus one residual model per source.
pub fn train_trl(
    ds: &Dataset,
    base_spec: &LearnerSpec,
    resid_spec: &LearnerSpec,
) -> Result<Predictor> {
    ds.require_min_source_size(2)?;
    let rows: Vec<Vec<usize>> = (0..ds.n_sources())
        .map(|p| ds.rows_of(p).to_vec())
        .collect();
    train_residual_family(ds, base_spec, resid_spec, &rows, Family::Trl, None)
}

/// Ascending union of the rows of the listed source positions.
pub(crate) fn union_rows(ds: &Dataset, members: &[usize]) -> Vec<usize> {
    let mut rows: Vec<usize> = members
        .iter()
        .flat_map(|&m| ds.rows_of(m).iter().copied())
        .collect();
    rows.sort_unstable();
    rows.dedup();
    rows
}

/// Pooled base plus, for each source, a residual model trained on the
/// residual rows of its cluster. Every source needs a cluster containing it.
pub fn train_ctrl(
    ds: &Dataset,
    base_spec: &LearnerSpec,
    resid_spec: &LearnerSpec,
    clusters: &ClusterMap,
) -> Result<Predictor> {
    let mut cluster_rows = Vec::with_capacity(ds.n_sources());
    let mut normalized = ClusterMap::new();
    for id in ds.sources() {
        let members = clusters.get(id).ok_or_else(|| Error::Cluster {
            target: id.clone(),
            reason: "no cluster given".into(),
        })?;
        if members.is_empty() {
            return Err(Error::Cluster {
                target: id.clone(),
                reason: "cluster is empty".into(),
            });
        }
        if !members.contains(id) {
            return Err(Error::Cluster {
                target: id.clone(),
                reason: "cluster does not contain its own source".into(),
            });
        }
        let mut pos = Vec::with_capacity(members.len());
        for m in members {
            pos.push(ds.source_pos(m).ok_or_else(|| Error::Cluster {
                target: id.clone(),
                reason: format!("member `{m}` is not a known source"),
            })?);
        }
        let rows = union_rows(ds, &pos);
        if rows.is_empty() {
            return Err(Error::Cluster {
                target: id.clone(),
                reason: "cluster has no training rows".into(),
            });
        }
        cluster_rows.push(rows);
        normalized.insert(id.clone(), members.clone());
    }
    for key in clusters.keys() {
        if ds.source_pos(key).is_none() {
            return Err(Error::UnknownSource(key.clone()));
        }
    }
    train_residual_family(
        ds,
        base_spec,
        resid_spec,
        &cluster_rows,
        Family::Ctrl,
        Some(normalized),
    )
}

impl Predictor {
    pub fn source_pos(&self, id: &str) -> Result<usize> {
        self.sources
            .binary_search_by(|s| s.as_str().cmp(id))
            .map_err(|_| Error::UnknownSource(id.to_string()))
    }

    fn predict_row_at(&self, x: &[f64], pos: usize, buf: &mut Vec<f64>) -> Result<f64> {
        match self.family {
            Family::Global | Family::Rwg | Family::Jtt => base_at(
                self.base.as_ref().expect("global-shaped"),
                x,
                pos,
                self.sources.len(),
                buf,
            ),
            Family::Local => self.per_source[pos].predict_row(x),
            Family::Trl | Family::Ctrl => {
                let b = base_at(
                    self.base.as_ref().expect("residual family"),
                    x,
                    pos,
                    self.sources.len(),
                    buf,
                )?;
                Ok(b + self.per_source[pos].predict_row(x)?)
            }
        }
    }

    /// Predictions for every row of `x` as if it belonged to source `g`.
    pub fn predict_at(&self, x: &Matrix, g: &str) -> Result<Vec<f64>> {
        let pos = self.source_pos(g)?;
        self.predict_at_pos(x, pos)
    }

    pub fn predict_at_pos(&self, x: &Matrix, pos: usize) -> Result<Vec<f64>> {
        if x.rows() > 0 && x.cols() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.cols(),
            });
        }
        let mut buf = Vec::with_capacity(self.n_features + self.sources.len());
        (0..x.rows())
            .map(|i| self.predict_row_at(x.row(i), pos, &mut buf))
            .collect()
    }

    /// Each row of `ds` predicted at its own source. `ds` must share this
    /// predictor's source universe.
    pub fn predict_own(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.check_universe(ds)?;
        let mut buf = Vec::with_capacity(self.n_features + self.sources.len());
        (0..ds.n_rows())
            .map(|i| self.predict_row_at(ds.features().row(i), ds.row_source()[i], &mut buf))
            .collect()
    }

    pub(crate) fn check_universe(&self, ds: &Dataset) -> Result<()> {
        if ds.sources() != self.sources.as_slice() {
            return Err(Error::Invalid(
                "dataset source universe differs from the predictor's".into(),
            ));
        }
        if ds.n_features() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: ds.n_features(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PredictorDocument {
            format_version: MODEL_FORMAT_VERSION,
            predictor: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Invalid("predictor document lacks format_version".into()))?;
        if found != u64::from(MODEL_FORMAT_VERSION) {
            return Err(Error::Version {
                found: found as u32,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let doc: PredictorDocument = serde_json::from_value(value)?;
        Ok(doc.predictor)
    }
}

/// Every source in its own cluster.
pub fn singleton_clusters(ds: &Dataset) -> ClusterMap {
    ds.sources()
        .iter()
        .map(|s| (s.clone(), vec![s.clone()]))
        .collect()
}
