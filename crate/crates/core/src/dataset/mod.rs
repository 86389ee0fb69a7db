//! Multi-source data model.
//!
//! A [`Dataset`] is the triple of features, outcomes and per-row source ids.
//! Source ids are opaque strings; the dataset keeps them in lexicographic
//! order and refers to them internally by position in that order.

mod csv_io;
mod synth;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

pub use csv_io::{load_csv, read_csv, write_csv, write_csv_to, CsvSchema};
pub use synth::{generate_synthetic, GroundTruth, SynthConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    outcome: Vec<f64>,
    feature_names: Vec<String>,
    sources: Vec<String>,
    row_source: Vec<usize>,
    source_rows: Vec<Vec<usize>>,
}

impl Dataset {
    /// Builds a dataset, validating shapes and finiteness. The source universe
    /// is the set of ids appearing in `source_ids`.
    pub fn new(
        features: Matrix,
        outcome: Vec<f64>,
        source_ids: &[String],
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let universe: BTreeSet<&str> = source_ids.iter().map(String::as_str).collect();
        let universe: Vec<String> = universe.into_iter().map(str::to_string).collect();
        Self::with_universe(features, outcome, source_ids, feature_names, universe)
    }

    /// Like [`Dataset::new`] but with an explicit source universe, which may
    /// contain sources with no rows (used for subset views).
    pub fn with_universe(
        features: Matrix,
        outcome: Vec<f64>,
        source_ids: &[String],
        feature_names: Vec<String>,
        mut universe: Vec<String>,
    ) -> Result<Self> {
        let n = features.rows();
        if n == 0 {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        if features.cols() == 0 {
            return Err(Error::Empty("dataset has no feature columns".into()));
        }
        if outcome.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: outcome.len(),
            });
        }
        if source_ids.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: source_ids.len(),
            });
        }
        if feature_names.len() != features.cols() {
            return Err(Error::Dimension {
                expected: features.cols(),
                got: feature_names.len(),
            });
        }
        if !features.all_finite() {
            return Err(Error::NonFinite("features".into()));
        }
        if outcome.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("outcome".into()));
        }
        universe.sort();
        universe.dedup();
        let pos: BTreeMap<&str, usize> = universe
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut row_source = Vec::with_capacity(n);
        let mut source_rows = vec![Vec::new(); universe.len()];
        for (i, id) in source_ids.iter().enumerate() {
            let p = *pos
                .get(id.as_str())
                .ok_or_else(|| Error::UnknownSource(id.clone()))?;
            row_source.push(p);
            source_rows[p].push(i);
        }
        Ok(Dataset {
            features,
            outcome,
            feature_names,
            sources: universe,
            row_source,
            source_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Source ids in lexicographic order.
    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    /// Position of each row's source in [`Dataset::sources`].
    pub fn row_source(&self) -> &[usize] {
        &self.row_source
    }

    pub fn source_id_of_row(&self, i: usize) -> &str {
        &self.sources[self.row_source[i]]
    }

    pub fn source_pos(&self, id: &str) -> Option<usize> {
        self.sources.binary_search_by(|s| s.as_str().cmp(id)).ok()
    }

    pub fn require_source(&self, id: &str) -> Result<usize> {
        self.source_pos(id)
            .ok_or_else(|| Error::UnknownSource(id.to_string()))
    }

    /// Row indices of the source at position `pos`, ascending.
    pub fn rows_of(&self, pos: usize) -> &[usize] {
        &self.source_rows[pos]
    }

    pub fn source_size(&self, pos: usize) -> usize {
        self.source_rows[pos].len()
    }

    /// Map from source id to its row indices.
    pub fn source_index(&self) -> BTreeMap<&str, &[usize]> {
        self.sources
            .iter()
            .zip(&self.source_rows)
            .map(|(s, r)| (s.as_str(), r.as_slice()))
            .collect()
    }

    pub fn source_sizes(&self) -> BTreeMap<String, usize> {
        self.sources
            .iter()
            .zip(&self.source_rows)
            .map(|(s, r)| (s.clone(), r.len()))
            .collect()
    }

    /// Row-subset view in the given order. The source universe is kept, so
    /// positions stay comparable with the parent.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        let ids: Vec<String> = rows
            .iter()
            .map(|&i| self.sources[self.row_source[i]].clone())
            .collect();
        Dataset::with_universe(
            self.features.select_rows(rows),
            rows.iter().map(|&i| self.outcome[i]).collect(),
            &ids,
            self.feature_names.clone(),
            self.sources.clone(),
        )
    }

    /// Errors unless every source has at least `needed` rows.
    pub fn require_min_source_size(&self, needed: usize) -> Result<()> {
        for (pos, rows) in self.source_rows.iter().enumerate() {
            if rows.len() < needed {
                return Err(Error::SourceTooSmall {
                    source_id: self.sources[pos].clone(),
                    rows: rows.len(),
                    needed,
                });
            }
        }
        Ok(())
    }
}

/// Disjoint train/validation row sets of a parent dataset, each ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPair {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Rows of a source sent to the training view: `ceil(f·n)` clamped to
/// `[1, n-1]`.
pub fn train_count(n: usize, train_fraction: f64) -> usize {
    // The small offset keeps products like 0.7 * 10 from rounding up past 7.
    let c = (train_fraction * n as f64 - 1e-9).ceil().max(0.0) as usize;
    c.clamp(1, n.saturating_sub(1).max(1))
}

/// Per-source random split. Every source contributes at least one row to
/// each view, so every source needs at least two rows.
pub fn stratified_split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::config(
            "train_fraction",
            format!("must lie in (0, 1), got {train_fraction}"),
        ));
    }
    ds.require_min_source_size(2)?;
    let mut train = Vec::with_capacity(ds.n_rows());
    let mut validation = Vec::new();
    for (pos, id) in ds.sources().iter().enumerate() {
        let mut rows = ds.rows_of(pos).to_vec();
        let mut rng = seed::rng(seed::derive(
            seed,
            "stratified-split",
            &[id.as_str().into()],
        ));
        rows.shuffle(&mut rng);
        let k = train_count(rows.len(), train_fraction);
        train.extend_from_slice(&rows[..k]);
        validation.extend_from_slice(&rows[k..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok(SplitPair { train, validation })
}

/// The bottom third of sources by row count (`floor(|M|/3)` of them), ties
/// broken by id.
pub fn small_sources(ds: &Dataset) -> BTreeSet<String> {
    small_sources_from_sizes(&ds.source_sizes())
}

pub fn small_sources_from_sizes(sizes: &BTreeMap<String, usize>) -> BTreeSet<String> {
    let mut order: Vec<(&String, usize)> = sizes.iter().map(|(s, &n)| (s, n)).collect();
    order.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    order
        .into_iter()
        .take(sizes.len() / 3)
        .map(|(s, _)| s.clone())
        .collect()
}
