//! End-to-end benchmark: split the data, train every requested family under
//! every learner, score on the held-out rows and lay the results out as
//! files.
//!
//! Outputs are assembled in memory as `relative path -> bytes` and written in
//! one pass; a failed write removes everything already written.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{train_jtt, train_rwg, JttConfig};
use crate::cluster::{ClusterConfig, ClusterResult, ClusterSearch};
use crate::dataset::{
    generate_synthetic, load_csv, small_sources, stratified_split, CsvSchema, Dataset, SynthConfig,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport, MetricConfig, PredictionMatrix};
use crate::learners::LearnerSpec;
use crate::pipeline::{train_ctrl, train_global, train_local, train_trl, Family, Predictor};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: CsvSchema,
    },
    /// Generated with the run's master seed.
    Synthetic {
        #[serde(default)]
        config: SynthConfig,
    },
}

/// One learner kind in the comparison. The residual spec defaults to the
/// base spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerChoice {
    pub name: String,
    pub base: LearnerSpec,
    #[serde(default)]
    pub residual: Option<LearnerSpec>,
}

impl LearnerChoice {
    pub fn residual_spec(&self) -> &LearnerSpec {
        self.residual.as_ref().unwrap_or(&self.base)
    }
}

fn default_families() -> Vec<Family> {
    Family::ALL.to_vec()
}

/// Tree base with a shrunken linear residual stage: per-source effects are
/// smooth, and small clusters give too few rows for residual trees.
pub fn default_learners() -> Vec<LearnerChoice> {
    vec![LearnerChoice {
        name: "tree".into(),
        base: LearnerSpec::tree(6, 10),
        residual: Some(LearnerSpec::ridge(10.0)),
    }]
}

fn default_train_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    #[serde(default = "default_families")]
    pub families: Vec<Family>,
    #[serde(default = "default_learners")]
    pub learners: Vec<LearnerChoice>,
    #[serde(default)]
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub jtt: JttConfig,
    #[serde(default)]
    pub metrics: MetricConfig,
    #[serde(default)]
    pub seed: u64,
    /// Share of each source's rows used for training; the rest is the test set.
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Worker threads; `None` leaves the choice to the caller.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn synthetic(config: SynthConfig, seed: u64) -> Self {
        RunConfig {
            data: DataSource::Synthetic { config },
            families: default_families(),
            learners: default_learners(),
            cluster: ClusterConfig::default(),
            jtt: JttConfig::default(),
            metrics: MetricConfig::default(),
            seed,
            train_fraction: default_train_fraction(),
            workers: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::config(
                "families",
                "request at least one model family",
            ));
        }
        let distinct: BTreeSet<_> = self.families.iter().collect();
        if distinct.len() != self.families.len() {
            return Err(Error::config("families", "families must be distinct"));
        }
        if self.learners.is_empty() {
            return Err(Error::config("learners", "request at least one learner"));
        }
        let mut names = BTreeSet::new();
        for l in &self.learners {
            if l.name.is_empty()
                || !l
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::config(
                    "learners.name",
                    format!("`{}` must be nonempty [A-Za-z0-9_-]", l.name),
                ));
            }
            if !names.insert(l.name.as_str()) {
                return Err(Error::config(
                    "learners.name",
                    format!("duplicate learner `{}`", l.name),
                ));
            }
            l.base.validate()?;
            l.residual_spec().validate()?;
        }
        if self.families.contains(&Family::Ctrl) {
            self.cluster.validate()?;
        }
        self.metrics.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction", "must lie in (0, 1)"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if let DataSource::Synthetic { config } = &self.data {
            config.validate()?;
        }
        Ok(())
    }

    /// Loads or generates the full dataset.
    pub fn load_data(&self) -> Result<Dataset> {
        match &self.data {
            DataSource::Csv { path, schema } => load_csv(path, schema),
            DataSource::Synthetic { config } => Ok(generate_synthetic(config, self.seed)?.0),
        }
    }

    /// A learner spec whose seed salt also depends on the master seed.
    fn seeded(&self, spec: &LearnerSpec, learner: &str, role: &str) -> LearnerSpec {
        let salt = seed::derive(
            self.seed,
            "learner",
            &[learner.into(), role.into(), spec.seed_salt.into()],
        );
        spec.clone().with_salt(salt)
    }
}

/// Row indices of the full dataset and the small sources, by training size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub small_sources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerReport {
    pub learner: String,
    pub eval: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub learners: Vec<LearnerReport>,
}

impl BenchReport {
    pub fn learner(&self, name: &str) -> Option<&EvalReport> {
        self.learners
            .iter()
            .find(|l| l.learner == name)
            .map(|l| &l.eval)
    }

    /// Rows = models, one column group per learner.
    pub fn table1_csv(&self) -> String {
        let mut models: Vec<String> = Vec::new();
        for l in &self.learners {
            for m in &l.eval.models {
                if !models.contains(&m.model) {
                    models.push(m.model.clone());
                }
            }
        }
        let mut out = String::from("model");
        for l in &self.learners {
            let n = &l.learner;
            out.push_str(&format!(",{n}_mse,{n}_small_mse,{n}_rwa,{n}_average_rank"));
        }
        out.push('\n');
        for model in &models {
            out.push_str(model);
            for l in &self.learners {
                match l.eval.model(model) {
                    Some(m) => out.push_str(&format!(
                        ",{},{},{},{}",
                        m.mse,
                        m.small_mse,
                        m.rwa.map_or("NA".to_string(), |v| v.to_string()),
                        m.average_rank
                    )),
                    None => out.push_str(",NA,NA,NA,NA"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// The per-learner threshold sweeps stacked, each prefixed by its learner.
    pub fn sweep_csv(&self) -> String {
        let mut out = String::new();
        for (k, l) in self.learners.iter().enumerate() {
            for (j, line) in l.eval.sweep_csv().lines().enumerate() {
                if j == 0 && k > 0 {
                    continue;
                }
                let prefix = if j == 0 {
                    "learner"
                } else {
                    l.learner.as_str()
                };
                out.push_str(&format!("{prefix},{line}\n"));
            }
        }
        out
    }
}

/// In-memory output tree.
pub type Outputs = BTreeMap<PathBuf, Vec<u8>>;

pub struct BenchRun {
    pub report: BenchReport,
    pub outputs: Outputs,
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// The run configuration as saved next to the results. The worker count
/// does not affect any output, so it is dropped to keep runs byte-identical.
fn saved_config(cfg: &RunConfig) -> Result<Vec<u8>> {
    json(&RunConfig {
        workers: None,
        ..cfg.clone()
    })
}

fn train_family(
    family: Family,
    train: &Dataset,
    cfg: &RunConfig,
    learner: &LearnerChoice,
    log: &(dyn Fn(&str) + Sync),
    outputs: &mut Outputs,
) -> Result<Predictor> {
    let base = cfg.seeded(&learner.base, &learner.name, "base");
    let resid = cfg.seeded(learner.residual_spec(), &learner.name, "residual");
    match family {
        Family::Global => train_global(train, &base),
        Family::Local => train_local(train, &base),
        Family::Trl => train_trl(train, &base, &resid),
        Family::Rwg => train_rwg(train, &base),
        Family::Jtt => train_jtt(train, &base, &cfg.jtt),
        Family::Ctrl => {
            let result = ClusterSearch::new(
                train,
                &base,
                &resid,
                &cfg.cluster,
                search_seed(cfg, learner),
            )?
            .run_all()?;
            let sizes: Vec<String> = result
                .reports
                .iter()
                .map(|r| r.cluster.len().to_string())
                .collect();
            log(&format!(
                "{}: cluster sizes [{}]",
                learner.name,
                sizes.join(" ")
            ));
            let dir = PathBuf::from("clusters");
            outputs.insert(dir.join(format!("{}.json", learner.name)), json(&result)?);
            outputs.insert(
                dir.join(format!("{}_curves.csv", learner.name)),
                result.curves_csv().into_bytes(),
            );
            outputs.insert(
                dir.join(format!("{}_weights.csv", learner.name)),
                result.weights_csv().into_bytes(),
            );
            train_ctrl(train, &base, &resid, &result.cluster_map())
        }
    }
}

fn score(
    cfg: &RunConfig,
    split: &SplitRecord,
    matrices: &[(String, Vec<PredictionMatrix>)],
) -> Result<BenchReport> {
    let small: BTreeSet<String> = split.small_sources.iter().cloned().collect();
    let mut learners = Vec::with_capacity(matrices.len());
    for (name, ms) in matrices {
        learners.push(LearnerReport {
            learner: name.clone(),
            eval: evaluate(ms, &small, &cfg.metrics)?,
        });
    }
    Ok(BenchReport {
        seed: cfg.seed,
        n_train: split.train.len(),
        n_test: split.test.len(),
        learners,
    })
}

fn report_outputs(report: &BenchReport, outputs: &mut Outputs) -> Result<()> {
    outputs.insert("report.json".into(), json(report)?);
    outputs.insert("table1.csv".into(), report.table1_csv().into_bytes());
    outputs.insert("rwa_sweep.csv".into(), report.sweep_csv().into_bytes());
    Ok(())
}

/// Runs the benchmark on `full`. `log` receives one progress line per step.
pub fn run_benchmark_on(
    full: &Dataset,
    cfg: &RunConfig,
    log: &(dyn Fn(&str) + Sync),
) -> Result<BenchRun> {
    cfg.validate()?;
    let parts = stratified_split(
        full,
        cfg.train_fraction,
        seed::derive(cfg.seed, "benchmark-split", &[]),
    )?;
    let train = full.subset(&parts.train)?;
    let test = full.subset(&parts.validation)?;
    let split = SplitRecord {
        small_sources: small_sources(&train).into_iter().collect(),
        train: parts.train,
        test: parts.validation,
    };
    log(&format!(
        "data: {} rows, {} sources, {} features; train {} / test {}",
        full.n_rows(),
        full.n_sources(),
        full.n_features(),
        split.train.len(),
        split.test.len()
    ));
    let mut outputs = Outputs::new();
    outputs.insert("config.json".into(), saved_config(cfg)?);
    outputs.insert("split.json".into(), json(&split)?);
    let mut matrices = Vec::with_capacity(cfg.learners.len());
    for learner in &cfg.learners {
        let mut ms = Vec::with_capacity(cfg.families.len());
        for &family in &cfg.families {
            log(&format!("{}: training {}", learner.name, family.name()));
            let model = train_family(family, &train, cfg, learner, log, &mut outputs)?;
            let m = PredictionMatrix::from_predictor(family.name(), &model, &test)?;
            let stem = format!("{}_{}", learner.name, family.name());
            outputs.insert(
                PathBuf::from("models").join(format!("{stem}.json")),
                model.to_json()?.into_bytes(),
            );
            outputs.insert(
                PathBuf::from("predictions").join(format!("{stem}.csv")),
                m.to_csv().into_bytes(),
            );
            ms.push(m);
        }
        matrices.push((learner.name.clone(), ms));
    }
    let report = score(cfg, &split, &matrices)?;
    report_outputs(&report, &mut outputs)?;
    log("scored all models");
    Ok(BenchRun { report, outputs })
}

pub fn run_benchmark(cfg: &RunConfig, log: &(dyn Fn(&str) + Sync)) -> Result<BenchRun> {
    cfg.validate()?;
    run_benchmark_on(&cfg.load_data()?, cfg, log)
}

/// Training part of the benchmark split, shared by the benchmark and the
/// standalone cluster search.
fn training_view(full: &Dataset, cfg: &RunConfig) -> Result<Dataset> {
    let parts = stratified_split(
        full,
        cfg.train_fraction,
        seed::derive(cfg.seed, "benchmark-split", &[]),
    )?;
    full.subset(&parts.train)
}

fn search_seed(cfg: &RunConfig, learner: &LearnerChoice) -> u64 {
    seed::derive(cfg.seed, "cluster-search", &[learner.name.as_str().into()])
}

/// The cluster search the benchmark runs for CTRL, for one target or all.
/// Emits `<learner>_clusters.json`, `<learner>_curves.csv` and
/// `<learner>_weights.csv` per learner.
pub fn run_clusters(
    cfg: &RunConfig,
    target: Option<&str>,
    log: &(dyn Fn(&str) + Sync),
) -> Result<Outputs> {
    cfg.validate()?;
    cfg.cluster.validate()?;
    let full = cfg.load_data()?;
    let train = training_view(&full, cfg)?;
    if let Some(t) = target {
        train.require_source(t)?;
    }
    let mut outputs = Outputs::new();
    outputs.insert("config.json".into(), saved_config(cfg)?);
    for learner in &cfg.learners {
        let base = cfg.seeded(&learner.base, &learner.name, "base");
        let resid = cfg.seeded(learner.residual_spec(), &learner.name, "residual");
        let search = ClusterSearch::new(
            &train,
            &base,
            &resid,
            &cfg.cluster,
            search_seed(cfg, learner),
        )?;
        let result = match target {
            Some(t) => ClusterResult {
                seed: search_seed(cfg, learner),
                config: cfg.cluster.clone(),
                reports: vec![search.run_target(t)?],
            },
            None => search.run_all()?,
        };
        for r in &result.reports {
            log(&format!(
                "{}: {} -> [{}]",
                learner.name,
                r.target,
                r.cluster.join(" ")
            ));
        }
        let n = &learner.name;
        outputs.insert(format!("{n}_clusters.json").into(), json(&result)?);
        outputs.insert(
            format!("{n}_curves.csv").into(),
            result.curves_csv().into_bytes(),
        );
        outputs.insert(
            format!("{n}_weights.csv").into(),
            result.weights_csv().into_bytes(),
        );
    }
    Ok(outputs)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Re-scores the saved prediction matrices of a benchmark directory,
/// optionally under different metric settings.
pub fn rescore(dir: &Path, metrics: Option<&MetricConfig>) -> Result<BenchRun> {
    let mut cfg: RunConfig = serde_json::from_str(&read_text(&dir.join("config.json"))?)?;
    if let Some(m) = metrics {
        cfg.metrics = m.clone();
    }
    cfg.validate()?;
    let split: SplitRecord = serde_json::from_str(&read_text(&dir.join("split.json"))?)?;
    let mut matrices = Vec::with_capacity(cfg.learners.len());
    for learner in &cfg.learners {
        let mut ms = Vec::with_capacity(cfg.families.len());
        for family in &cfg.families {
            let path =
                dir.join("predictions")
                    .join(format!("{}_{}.csv", learner.name, family.name()));
            ms.push(PredictionMatrix::from_csv(
                family.name(),
                &read_text(&path)?,
            )?);
        }
        matrices.push((learner.name.clone(), ms));
    }
    let report = score(&cfg, &split, &matrices)?;
    let mut outputs = Outputs::new();
    report_outputs(&report, &mut outputs)?;
    Ok(BenchRun { report, outputs })
}

/// Writes `outputs` under `dir`. On failure, files and directories created
/// by this call are removed before the error is returned.
pub fn write_outputs(dir: &Path, outputs: &Outputs) -> Result<()> {
    let mut created_dirs: Vec<PathBuf> = Vec::new();
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<()> {
        for (rel, bytes) in outputs {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                let mut missing = Vec::new();
                let mut p = parent.to_path_buf();
                while !p.as_os_str().is_empty() && !p.exists() {
                    missing.push(p.clone());
                    if !p.pop() {
                        break;
                    }
                }
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                created_dirs.extend(missing.into_iter().rev());
            }
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(())
    })();
    if result.is_err() {
        for f in &written {
            let _ = fs::remove_file(f);
        }
        for d in created_dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
    result
}

/// Removes the files `outputs` would create under `dir`, plus directories
/// left empty; used when a run fails after writing has started elsewhere.
pub fn remove_outputs(dir: &Path, outputs: &Outputs) {
    let mut parents = BTreeSet::new();
    for rel in outputs.keys() {
        let path = dir.join(rel);
        let _ = fs::remove_file(&path);
        if let Some(p) = path.parent() {
            parents.insert(p.to_path_buf());
        }
    }
    for p in parents.iter().rev() {
        let _ = fs::remove_dir(p);
    }
}
