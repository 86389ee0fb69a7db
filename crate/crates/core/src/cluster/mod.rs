//! Data-driven choice of which sources share a residual model.
//!
//! Two stages run over repeated train/validation splits. The stability stage
//! repeatedly offers a target a small random candidate set and records which
//! candidates the exact subset solver keeps; the keep rate is a similarity
//! weight. The selection stage ranks sources by that weight, fits a residual
//! model on the top `k` sources for every `k`, and picks `k` by the
//! one-standard-error rule on the target's validation error.
//!
//! Splits, base models and per-source residual models of a given iteration
//! depend only on the master seed and the iteration index, so one
//! [`ClusterSearch`] shares them between all targets.

mod one_se;
mod subset;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_split, Dataset};
use crate::error::{Error, Result};
use crate::learners::{FittedModel, LearnerSpec};
use crate::matrix::Matrix;
use crate::par;
use crate::pipeline::{base_residuals, fit_base, fit_residual, ClusterMap};
use crate::seed;

pub use one_se::{mean_and_se, one_se_rule, OneSe};
pub use subset::{solve_subset, subset_objective, SubsetInstance, MAX_ENUMERATION_CANDIDATES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    /// Random splits per stage.
    pub iterations: usize,
    /// Candidates offered per stability iteration, target included. Capped
    /// at the number of sources.
    pub candidate_count: usize,
    /// Largest cluster size tried by the selection stage.
    pub k_max: usize,
    /// Share of each source's rows used for fitting inside the search.
    pub train_fraction: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            iterations: 250,
            candidate_count: 6,
            k_max: 10,
            train_fraction: 0.8,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations", "must be at least 1"));
        }
        if self.candidate_count == 0 || self.candidate_count > MAX_ENUMERATION_CANDIDATES {
            return Err(Error::config(
                "candidate_count",
                format!("must lie in [1, {MAX_ENUMERATION_CANDIDATES}]"),
            ));
        }
        if self.k_max == 0 {
            return Err(Error::config("k_max", "must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Keep rates from the stability stage for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityWeights {
    pub target: String,
    /// selected / offered; 0 for never-offered sources, 1 for the target.
    pub weights: BTreeMap<String, f64>,
    pub selected: BTreeMap<String, usize>,
    pub offered: BTreeMap<String, usize>,
}

impl StabilityWeights {
    /// Sources ordered for the selection stage: the target, then by weight,
    /// then by selection count (both descending), then by id.
    pub fn ranking(&self) -> Vec<String> {
        let mut others: Vec<&String> = self.weights.keys().filter(|s| **s != self.target).collect();
        others.sort_by(|a, b| {
            self.weights[*b]
                .total_cmp(&self.weights[*a])
                .then(self.selected[*b].cmp(&self.selected[*a]))
                .then(a.cmp(b))
        });
        std::iter::once(self.target.clone())
            .chain(others.into_iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    /// Source added at this `k`.
    pub added: String,
    pub mean_mse: f64,
    pub se_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub target: String,
    pub stability: StabilityWeights,
    pub ranking: Vec<String>,
    pub curve: Vec<CurvePoint>,
    pub one_se: OneSe,
    /// The chosen cluster, in ranking order.
    pub cluster: Vec<String>,
}

/// Reports for every target, in source order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub seed: u64,
    pub config: ClusterConfig,
    pub reports: Vec<ClusterReport>,
}

impl ClusterResult {
    pub fn cluster_map(&self) -> ClusterMap {
        self.reports
            .iter()
            .map(|r| (r.target.clone(), r.cluster.clone()))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `target,k,added,mean_mse,se_mse,chosen` rows for every curve.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("target,k,added,mean_mse,se_mse,chosen\n");
        for r in &self.reports {
            for p in &r.curve {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.target,
                    p.k,
                    p.added,
                    p.mean_mse,
                    p.se_mse,
                    u8::from(p.k == r.one_se.k_star)
                ));
            }
        }
        out
    }

    /// `target,source,weight,selected,offered` rows.
    pub fn weights_csv(&self) -> String {
        let mut out = String::from("target,source,weight,selected,offered\n");
        for r in &self.reports {
            let s = &r.stability;
            for (id, w) in &s.weights {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.target, id, w, s.selected[id], s.offered[id]
                ));
            }
        }
        out
    }
}

/// Everything one split contributes to the search.
struct IterationFit {
    train_of: Vec<Vec<usize>>,
    validation_of: Vec<Vec<usize>>,
    /// `y - base(x, own source)` for every dataset row, base fit on the
    /// training part only.
    residual: Vec<f64>,
    /// One residual model per source on its own training rows; empty in the
    /// selection stage.
    source_models: Vec<FittedModel>,
}

#[derive(Clone, Copy)]
enum Stage {
    Stability,
    Selection,
}

impl Stage {
    fn tag(self) -> &'static str {
        match self {
            Stage::Stability => "stability",
            Stage::Selection => "selection",
        }
    }
}

type StageCache = OnceLock<std::result::Result<Vec<IterationFit>, String>>;

pub struct ClusterSearch<'a> {
    ds: &'a Dataset,
    base_spec: LearnerSpec,
    resid_spec: LearnerSpec,
    config: ClusterConfig,
    seed: u64,
    stability: StageCache,
    selection: StageCache,
}

impl<'a> ClusterSearch<'a> {
    pub fn new(
        ds: &'a Dataset,
        base_spec: &LearnerSpec,
        resid_spec: &LearnerSpec,
        config: &ClusterConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        base_spec.validate()?;
        resid_spec.validate()?;
        ds.require_min_source_size(2)?;
        Ok(ClusterSearch {
            ds,
            base_spec: base_spec.clone(),
            resid_spec: resid_spec.clone(),
            config: config.clone(),
            seed,
            stability: OnceLock::new(),
            selection: OnceLock::new(),
        })
    }

    fn fit_iteration(&self, stage: Stage, t: usize) -> Result<IterationFit> {
        let ds = self.ds;
        let tag = stage.tag();
        let split_seed = seed::derive(self.seed, tag, &["split".into(), t.into()]);
        let split = stratified_split(ds, self.config.train_fraction, split_seed)?;
        let mut train_of = vec![Vec::new(); ds.n_sources()];
        let mut validation_of = vec![Vec::new(); ds.n_sources()];
        for &i in &split.train {
            train_of[ds.row_source()[i]].push(i);
        }
        for &i in &split.validation {
            validation_of[ds.row_source()[i]].push(i);
        }
        let base_salt = seed::derive(
            self.base_spec.seed_salt,
            tag,
            &["base".into(), self.seed.into(), t.into()],
        );
        let base = fit_base(ds, &split.train, &self.base_spec, base_salt, None)?;
        let all: Vec<usize> = (0..ds.n_rows()).collect();
        let residual = base_residuals(ds, &base, &all)?;
        let source_models = match stage {
            Stage::Selection => Vec::new(),
            Stage::Stability => {
                let lookup = |i: usize| residual[i];
                let mut models = Vec::with_capacity(ds.n_sources());
                for (pos, rows) in train_of.iter().enumerate() {
                    let salt = seed::derive(
                        self.resid_spec.seed_salt,
                        tag,
                        &[
                            "residual".into(),
                            self.seed.into(),
                            t.into(),
                            ds.sources()[pos].as_str().into(),
                        ],
                    );
                    models.push(fit_residual(ds, rows, &lookup, &self.resid_spec, salt)?);
                }
                models
            }
        };
        Ok(IterationFit {
            train_of,
            validation_of,
            residual,
            source_models,
        })
    }

    fn stage(&self, stage: Stage) -> Result<&[IterationFit]> {
        let cell = match stage {
            Stage::Stability => &self.stability,
            Stage::Selection => &self.selection,
        };
        let fits = cell.get_or_init(|| {
            par::map_indexed(self.config.iterations, |t| self.fit_iteration(stage, t))
                .into_iter()
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.to_string())
        });
        fits.as_deref().map_err(|e| Error::Invalid(e.clone()))
    }

    fn candidates(&self, g: usize, t: usize) -> Vec<usize> {
        let ds = self.ds;
        let count = self.config.candidate_count.min(ds.n_sources());
        let mut others: Vec<usize> = (0..ds.n_sources()).filter(|&m| m != g).collect();
        let mut rng = seed::rng(seed::derive(
            self.seed,
            "candidates",
            &[ds.sources()[g].as_str().into(), t.into()],
        ));
        others.shuffle(&mut rng);
        let mut chosen: Vec<usize> = others[..count - 1].to_vec();
        chosen.push(g);
        chosen.sort_unstable();
        chosen
    }

    /// The subset problem one stability iteration poses for target `g`.
    fn subset_instance(
        &self,
        fit: &IterationFit,
        g: usize,
        candidates: &[usize],
    ) -> Result<SubsetInstance> {
        let ds = self.ds;
        let rows = &fit.validation_of[g];
        let residuals: Vec<f64> = rows.iter().map(|&i| fit.residual[i]).collect();
        let mut pred = Matrix::zeros(rows.len(), candidates.len());
        for (r, &i) in rows.iter().enumerate() {
            let x = ds.features().row(i);
            for (c, &m) in candidates.iter().enumerate() {
                pred.set(r, c, fit.source_models[m].predict_row(x)?);
            }
        }
        SubsetInstance::new(
            candidates
                .iter()
                .map(|&m| ds.sources()[m].clone())
                .collect(),
            &ds.sources()[g],
            residuals,
            pred,
            candidates
                .iter()
                .map(|&m| fit.train_of[m].len() as f64)
                .collect(),
        )
    }

    pub fn stability_weights(&self, target: &str) -> Result<StabilityWeights> {
        let ds = self.ds;
        let g = ds.require_source(target)?;
        let fits = self.stage(Stage::Stability)?;
        let mut selected = vec![0usize; ds.n_sources()];
        let mut offered = vec![0usize; ds.n_sources()];
        for (t, fit) in fits.iter().enumerate() {
            let cand = self.candidates(g, t);
            let z = solve_subset(&self.subset_instance(fit, g, &cand)?)?;
            for (c, &m) in cand.iter().enumerate() {
                offered[m] += 1;
                if z[c] {
                    selected[m] += 1;
                }
            }
        }
        let mut weights = BTreeMap::new();
        let mut sel = BTreeMap::new();
        let mut off = BTreeMap::new();
        for (m, id) in ds.sources().iter().enumerate() {
            let w = if m == g {
                1.0
            } else if offered[m] == 0 {
                0.0
            } else {
                selected[m] as f64 / offered[m] as f64
            };
            weights.insert(id.clone(), w);
            sel.insert(id.clone(), selected[m]);
            off.insert(id.clone(), offered[m]);
        }
        Ok(StabilityWeights {
            target: target.to_string(),
            weights,
            selected: sel,
            offered: off,
        })
    }

    /// Validation error curve over the top-`k` prefixes of `ranking` and the
    /// one-SE choice of `k`.
    pub fn select_cluster(&self, stability: StabilityWeights) -> Result<ClusterReport> {
        let ds = self.ds;
        let g = ds.require_source(&stability.target)?;
        if stability.weights.len() != ds.n_sources()
            || ds
                .sources()
                .iter()
                .any(|s| !stability.weights.contains_key(s))
        {
            return Err(Error::Weights("weights must cover every source".into()));
        }
        let ranking = stability.ranking();
        let ranked: Vec<usize> = ranking
            .iter()
            .map(|s| ds.source_pos(s).expect("known"))
            .collect();
        let k_eff = self.config.k_max.min(ds.n_sources());
        let fits = self.stage(Stage::Selection)?;
        let mut errors = Vec::with_capacity(fits.len());
        for (t, fit) in fits.iter().enumerate() {
            let lookup = |i: usize| fit.residual[i];
            let val = &fit.validation_of[g];
            let mut row = Vec::with_capacity(k_eff);
            for k in 1..=k_eff {
                let mut rows: Vec<usize> = ranked[..k]
                    .iter()
                    .flat_map(|&m| fit.train_of[m].iter().copied())
                    .collect();
                rows.sort_unstable();
                let salt = seed::derive(
                    self.resid_spec.seed_salt,
                    "selection",
                    &[
                        "residual".into(),
                        self.seed.into(),
                        t.into(),
                        stability.target.as_str().into(),
                        k.into(),
                    ],
                );
                let model = fit_residual(ds, &rows, &lookup, &self.resid_spec, salt)?;
                let mut sse = 0.0;
                for &i in val {
                    let e = fit.residual[i] - model.predict_row(ds.features().row(i))?;
                    sse += e * e;
                }
                row.push(sse / val.len() as f64);
            }
            errors.push(row);
        }
        let (means, ses) = mean_and_se(&errors);
        let one_se = one_se_rule(&means, &ses)?;
        let curve = (0..k_eff)
            .map(|k| CurvePoint {
                k: k + 1,
                added: ranking[k].clone(),
                mean_mse: means[k],
                se_mse: ses[k],
            })
            .collect();
        Ok(ClusterReport {
            target: stability.target.clone(),
            cluster: ranking[..one_se.k_star].to_vec(),
            ranking,
            curve,
            one_se,
            stability,
        })
    }

    pub fn run_target(&self, target: &str) -> Result<ClusterReport> {
        self.select_cluster(self.stability_weights(target)?)
    }

    /// Runs both stages for every source.
    pub fn run_all(&self) -> Result<ClusterResult> {
        // Fill the shared caches before fanning out over targets.
        self.stage(Stage::Stability)?;
        self.stage(Stage::Selection)?;
        let reports = par::map_indexed(self.ds.n_sources(), |g| {
            self.run_target(&self.ds.sources()[g])
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(ClusterResult {
            seed: self.seed,
            config: self.config.clone(),
            reports,
        })
    }
}

/// Clusters for every source of `ds`.
pub fn find_clusters(
    ds: &Dataset,
    base_spec: &LearnerSpec,
    resid_spec: &LearnerSpec,
    config: &ClusterConfig,
    seed: u64,
) -> Result<ClusterResult> {
    ClusterSearch::new(ds, base_spec, resid_spec, config, seed)?.run_all()
}
