//! Test-set metrics: overall MSE, MSE on small sources, the rank-weighted
//! average outcome (RWA) of individuals each model would target for their
//! own source, and average ranks across models.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pipeline::Predictor;

pub const DEFAULT_THRESHOLDS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Counterfactual predictions of one model: entry `(i, g)` is the prediction
/// for test row `i` as if it belonged to source `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMatrix {
    pub model: String,
    pub sources: Vec<String>,
    /// Position in `sources` of each row's actual source.
    pub row_source: Vec<usize>,
    pub outcome: Vec<f64>,
    pub predictions: Matrix,
}

impl PredictionMatrix {
    pub fn new(
        model: impl Into<String>,
        sources: Vec<String>,
        row_source: Vec<usize>,
        outcome: Vec<f64>,
        predictions: Matrix,
    ) -> Result<Self> {
        let n = outcome.len();
        if n == 0 {
            return Err(Error::Empty("prediction matrix has no rows".into()));
        }
        if row_source.len() != n || predictions.rows() != n {
            return Err(Error::Dimension {
                expected: n,
                got: row_source.len().min(predictions.rows()),
            });
        }
        if predictions.cols() != sources.len() {
            return Err(Error::Dimension {
                expected: sources.len(),
                got: predictions.cols(),
            });
        }
        if row_source.iter().any(|&p| p >= sources.len()) {
            return Err(Error::Invalid("row source outside the source list".into()));
        }
        if !predictions.all_finite() || outcome.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prediction matrix".into()));
        }
        Ok(PredictionMatrix {
            model: model.into(),
            sources,
            row_source,
            outcome,
            predictions,
        })
    }

    /// Evaluates `predictor` on every row of `test` at every source.
    pub fn from_predictor(
        model: impl Into<String>,
        predictor: &Predictor,
        test: &Dataset,
    ) -> Result<Self> {
        let n = test.n_rows();
        let s = test.n_sources();
        let mut predictions = Matrix::zeros(n, s);
        for g in 0..s {
            let col = predictor.predict_at(test.features(), &test.sources()[g])?;
            for (i, v) in col.into_iter().enumerate() {
                predictions.set(i, g, v);
            }
        }
        PredictionMatrix::new(
            model,
            test.sources().to_vec(),
            test.row_source().to_vec(),
            test.outcome().to_vec(),
            predictions,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    /// Prediction of each row at its own source.
    pub fn own(&self) -> Vec<f64> {
        self.row_source
            .iter()
            .enumerate()
            .map(|(i, &g)| self.predictions.get(i, g))
            .collect()
    }

    fn same_shape(&self, other: &PredictionMatrix) -> bool {
        self.sources == other.sources
            && self.row_source == other.row_source
            && self.outcome == other.outcome
    }

    /// `row,source,outcome,<one column per source>` with full float precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,source,outcome");
        for s in &self.sources {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for i in 0..self.n_rows() {
            out.push_str(&format!(
                "{},{},{}",
                i, self.sources[self.row_source[i]], self.outcome[i]
            ));
            for v in self.predictions.row(i) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

impl PredictionMatrix {
    /// Parses the layout written by [`PredictionMatrix::to_csv`].
    pub fn from_csv(model: impl Into<String>, text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.len() < 4
            || &headers[0] != "row"
            || &headers[1] != "source"
            || &headers[2] != "outcome"
        {
            return Err(Error::MissingColumn("row,source,outcome header".into()));
        }
        let sources: Vec<String> = headers.iter().skip(3).map(str::to_string).collect();
        let mut row_source = Vec::new();
        let mut outcome = Vec::new();
        let mut data = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |c: usize| -> Result<f64> {
                rec[c].trim().parse::<f64>().map_err(|_| Error::Parse {
                    row: r + 1,
                    column: headers[c].to_string(),
                    value: rec[c].to_string(),
                })
            };
            let src = sources
                .iter()
                .position(|s| s == &rec[1])
                .ok_or_else(|| Error::UnknownSource(rec[1].to_string()))?;
            row_source.push(src);
            outcome.push(parse(2)?);
            for c in 3..rec.len() {
                data.push(parse(c)?);
            }
        }
        let n = outcome.len();
        let predictions = Matrix::from_vec(n, sources.len(), data)?;
        PredictionMatrix::new(model, sources, row_source, outcome, predictions)
    }
}

pub fn mse(pred: &[f64], y: &[f64]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::Empty("mse of no rows".into()));
    }
    if pred.len() != y.len() {
        return Err(Error::Dimension {
            expected: y.len(),
            got: pred.len(),
        });
    }
    let s: f64 = pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(s / pred.len() as f64)
}

/// MSE of own-source predictions over rows from the `small` sources.
pub fn small_mse(m: &PredictionMatrix, small: &BTreeSet<String>) -> Result<f64> {
    if small.is_empty() {
        return Err(Error::Empty("small-source set".into()));
    }
    let mut p = Vec::new();
    let mut y = Vec::new();
    for i in 0..m.n_rows() {
        let g = m.row_source[i];
        if small.contains(&m.sources[g]) {
            p.push(m.predictions.get(i, g));
            y.push(m.outcome[i]);
        }
    }
    if p.is_empty() {
        return Err(Error::Empty("no test rows in small sources".into()));
    }
    mse(&p, &y)
}

/// Rows in each model's top-q set.
pub fn top_count(q: f64, n: usize) -> usize {
    ((q * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Rows `i` among the top `k` of column `g` (descending, ties by row) whose
/// own source is `g`.
fn eligible_rows(m: &PredictionMatrix, g: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m.n_rows()).collect();
    order.sort_by(|&a, &b| {
        m.predictions
            .get(b, g)
            .total_cmp(&m.predictions.get(a, g))
            .then(a.cmp(&b))
    });
    let mut rows: Vec<usize> = order[..k]
        .iter()
        .copied()
        .filter(|&i| m.row_source[i] == g)
        .collect();
    rows.sort_unstable();
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwaOutcome {
    pub q: f64,
    /// Sources with at least `min_count` eligible rows under every model.
    pub eligible_sources: Vec<String>,
    /// One value per input model, in input order.
    pub values: Vec<f64>,
}

pub fn rwa(matrices: &[PredictionMatrix], q: f64, min_count: usize) -> Result<RwaOutcome> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::Empty("no prediction matrices".into()))?;
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::config("q", "must lie in (0, 1]"));
    }
    if min_count == 0 {
        return Err(Error::config("min_count", "must be at least 1"));
    }
    if matrices.iter().any(|m| !m.same_shape(first)) {
        return Err(Error::Invalid(
            "prediction matrices disagree on rows or sources".into(),
        ));
    }
    let k = top_count(q, first.n_rows());
    let s = first.sources.len();
    let eligible: Vec<Vec<Vec<usize>>> = matrices
        .iter()
        .map(|m| (0..s).map(|g| eligible_rows(m, g, k)).collect())
        .collect();
    let kept: Vec<usize> = (0..s)
        .filter(|&g| eligible.iter().all(|e| e[g].len() >= min_count))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyEligibleSet);
    }
    let values = eligible
        .iter()
        .map(|e| {
            let (mut sum, mut count) = (0.0, 0usize);
            for &g in &kept {
                for &i in &e[g] {
                    sum += first.outcome[i];
                    count += 1;
                }
            }
            sum / count as f64
        })
        .collect();
    Ok(RwaOutcome {
        q,
        eligible_sources: kept.iter().map(|&g| first.sources[g].clone()).collect(),
        values,
    })
}

/// One sweep row; `outcome` is `None` when no source is eligible at `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: f64,
    pub outcome: Option<RwaOutcome>,
}

pub fn rwa_sweep(
    matrices: &[PredictionMatrix],
    thresholds: &[f64],
    min_count: usize,
) -> Result<Vec<SweepRow>> {
    thresholds
        .iter()
        .map(|&q| match rwa(matrices, q, min_count) {
            Ok(o) => Ok(SweepRow {
                q,
                outcome: Some(o),
            }),
            Err(Error::EmptyEligibleSet) => Ok(SweepRow { q, outcome: None }),
            Err(e) => Err(e),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    LowerIsBetter,
    HigherIsBetter,
}

/// Ranks of `values` (best = 1), tied values sharing the mean of their ranks.
pub fn rank_values(values: &[f64], orientation: Orientation) -> Result<Vec<f64>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("rank input".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| match orientation {
        Orientation::LowerIsBetter => values[a].total_cmp(&values[b]),
        Orientation::HigherIsBetter => values[b].total_cmp(&values[a]),
    });
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    Ok(ranks)
}

/// Per-model mean rank over metrics. `table[metric][model]`; `None` cells
/// are errors.
pub fn average_ranks(table: &[Vec<Option<f64>>], orientation: &[Orientation]) -> Result<Vec<f64>> {
    if table.is_empty() {
        return Err(Error::Empty("no metrics to rank".into()));
    }
    if orientation.len() != table.len() {
        return Err(Error::Dimension {
            expected: table.len(),
            got: orientation.len(),
        });
    }
    let n_models = table[0].len();
    if n_models < 2 {
        return Err(Error::Invalid("ranking needs at least two models".into()));
    }
    let mut total = vec![0.0; n_models];
    for (row, &o) in table.iter().zip(orientation) {
        if row.len() != n_models {
            return Err(Error::Dimension {
                expected: n_models,
                got: row.len(),
            });
        }
        let values: Vec<f64> = row
            .iter()
            .map(|v| v.ok_or_else(|| Error::Invalid("missing metric value".into())))
            .collect::<Result<_>>()?;
        for (t, r) in total.iter_mut().zip(rank_values(&values, o)?) {
            *t += r;
        }
    }
    Ok(total.into_iter().map(|t| t / table.len() as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub model: String,
    pub mse: f64,
    pub small_mse: f64,
    /// RWA at the report's primary threshold; `None` when no source qualifies.
    pub rwa: Option<f64>,
    pub mse_rank: f64,
    pub small_mse_rank: f64,
    pub rwa_rank: Option<f64>,
    pub average_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub q: f64,
    pub min_count: usize,
    pub small_sources: Vec<String>,
    /// Sources entering RWA at `q`; empty when RWA is absent.
    pub eligible_sources: Vec<String>,
    pub models: Vec<ModelMetrics>,
    pub sweep: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    /// Primary RWA threshold.
    pub q: f64,
    pub thresholds: Vec<f64>,
    pub min_count: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            q: 0.2,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            min_count: 10,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        for &q in std::iter::once(&self.q).chain(&self.thresholds) {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::config(
                    "q",
                    format!("thresholds must lie in (0, 1], got {q}"),
                ));
            }
        }
        Ok(())
    }
}

/// Scores every model. Ranks use MSE, small-MSE and, when present, RWA; a
/// single model gets rank 1 everywhere.
pub fn evaluate(
    matrices: &[PredictionMatrix],
    small: &BTreeSet<String>,
    cfg: &MetricConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    if matrices.is_empty() {
        return Err(Error::Empty("no prediction matrices".into()));
    }
    let mses: Vec<f64> = matrices
        .iter()
        .map(|m| mse(&m.own(), &m.outcome))
        .collect::<Result<_>>()?;
    let smalls: Vec<f64> = matrices
        .iter()
        .map(|m| small_mse(m, small))
        .collect::<Result<_>>()?;
    let primary = match rwa(matrices, cfg.q, cfg.min_count) {
        Ok(o) => Some(o),
        Err(Error::EmptyEligibleSet) => None,
        Err(e) => return Err(e),
    };
    let sweep = rwa_sweep(matrices, &cfg.thresholds, cfg.min_count)?;
    let n = matrices.len();
    let rank_or_one = |vals: &[f64], o| -> Result<Vec<f64>> {
        if n < 2 {
            Ok(vec![1.0; n])
        } else {
            rank_values(vals, o)
        }
    };
    let mse_rank = rank_or_one(&mses, Orientation::LowerIsBetter)?;
    let small_rank = rank_or_one(&smalls, Orientation::LowerIsBetter)?;
    let rwa_rank = match &primary {
        Some(o) => Some(rank_or_one(&o.values, Orientation::HigherIsBetter)?),
        None => None,
    };
    let models = (0..n)
        .map(|j| {
            let mut ranks = vec![mse_rank[j], small_rank[j]];
            if let Some(r) = &rwa_rank {
                ranks.push(r[j]);
            }
            ModelMetrics {
                model: matrices[j].model.clone(),
                mse: mses[j],
                small_mse: smalls[j],
                rwa: primary.as_ref().map(|o| o.values[j]),
                mse_rank: mse_rank[j],
                small_mse_rank: small_rank[j],
                rwa_rank: rwa_rank.as_ref().map(|r| r[j]),
                average_rank: ranks.iter().sum::<f64>() / ranks.len() as f64,
            }
        })
        .collect();
    Ok(EvalReport {
        q: cfg.q,
        min_count: cfg.min_count,
        small_sources: small.iter().cloned().collect(),
        eligible_sources: primary.map(|o| o.eligible_sources).unwrap_or_default(),
        models,
        sweep,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn model(&self, name: &str) -> Option<&ModelMetrics> {
        self.models.iter().find(|m| m.model == name)
    }

    /// Rows = models; metric columns prefixed with `label` (e.g. a learner kind).
    pub fn table_csv(&self, label: &str) -> String {
        let mut out =
            format!("model,{label}_mse,{label}_small_mse,{label}_rwa,{label}_average_rank\n");
        for m in &self.models {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                m.model,
                m.mse,
                m.small_mse,
                opt(m.rwa),
                m.average_rank
            ));
        }
        out
    }

    /// Rows = models, columns = thresholds; `NA` marks thresholds where no
    /// source qualifies.
    pub fn sweep_csv(&self) -> String {
        let mut out = String::from("model");
        for row in &self.sweep {
            out.push_str(&format!(",q={}", row.q));
        }
        out.push('\n');
        for (j, m) in self.models.iter().enumerate() {
            out.push_str(&m.model);
            for row in &self.sweep {
                out.push(',');
                out.push_str(&opt(row.outcome.as_ref().map(|o| o.values[j])));
            }
            out.push('\n');
        }
        out.push_str("eligible_sources");
        for row in &self.sweep {
            out.push_str(&format!(
                ",{}",
                row.outcome.as_ref().map_or(0, |o| o.eligible_sources.len())
            ));
        }
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(model: &str, src: &[usize], y: &[f64], cols: &[Vec<f64>]) -> PredictionMatrix {
        let n = y.len();
        let mut p = Matrix::zeros(n, cols.len());
        for (g, c) in cols.iter().enumerate() {
            for i in 0..n {
                p.set(i, g, c[i]);
            }
        }
        let names = (0..cols.len())
            .map(|g| ((b'A' + g as u8) as char).to_string())
            .collect();
        PredictionMatrix::new(model, names, src.to_vec(), y.to_vec(), p).unwrap()
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, -1.0]).unwrap(), 1.0);
        assert!(mse(&[], &[]).is_err());
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn small_mse_restricts_rows() {
        let m = pm(
            "x",
            &[0, 0, 1],
            &[1.0, 2.0, 3.0],
            &[vec![1.0, 2.0, 0.0], vec![9.0, 9.0, 0.0]],
        );
        let small: BTreeSet<String> = ["A".to_string()].into();
        assert_eq!(small_mse(&m, &small).unwrap(), 0.0);
        let all: BTreeSet<String> = ["A".to_string(), "B".to_string()].into();
        assert_eq!(
            small_mse(&m, &all).unwrap(),
            mse(&m.own(), &m.outcome).unwrap()
        );
        let none: BTreeSet<String> = ["Z".to_string()].into();
        assert!(small_mse(&m, &none).is_err());
    }

    #[test]
    fn rwa_hand_example() {
        // Rows 0..5 with sources A,A,A,B,B. A's top is row 1 (an A row);
        // B's top is row 0 (also an A row), so only A qualifies.
        let y = [10.0, 20.0, 30.0, 40.0, 50.0];
        let m = pm(
            "x",
            &[0, 0, 0, 1, 1],
            &y,
            &[vec![0.0, 5.0, 1.0, 1.0, 1.0], vec![9.0, 0.0, 0.0, 1.0, 1.0]],
        );
        let o = rwa(&[m], 0.2, 1).unwrap();
        assert_eq!(o.eligible_sources, vec!["A"]);
        assert_eq!(o.values, vec![20.0]);
    }

    #[test]
    fn rwa_full_inclusion_is_mean_outcome() {
        let y = [1.0, 2.0, 3.0, 6.0];
        let m = pm(
            "x",
            &[0, 1, 1, 0],
            &y,
            &[vec![0.3; 4], vec![0.1, 0.2, 0.3, 0.4]],
        );
        let o = rwa(&[m], 1.0, 1).unwrap();
        assert_eq!(o.values, vec![3.0]);
    }

    #[test]
    fn rwa_ties_go_to_lower_row() {
        let m = pm("x", &[0, 0, 0], &[1.0, 2.0, 3.0], &[vec![5.0, 5.0, 5.0]]);
        assert_eq!(rwa(&[m.clone()], 0.3, 1).unwrap().values, vec![1.0]);
        assert_eq!(rwa(&[m], 0.34, 1).unwrap().values, vec![1.5]);
    }

    #[test]
    fn empty_eligible_set_is_reported() {
        let m = pm("x", &[0, 1], &[1.0, 2.0], &[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(
            rwa(&[m.clone()], 0.5, 1),
            Err(Error::EmptyEligibleSet)
        ));
        let sweep = rwa_sweep(&[m], &[0.5, 1.0], 1).unwrap();
        assert!(sweep[0].outcome.is_none());
        assert!(sweep[1].outcome.is_some());
    }

    #[test]
    fn eligibility_is_joint_across_models() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let src = [0, 0, 1, 1];
        let good = pm(
            "good",
            &src,
            &y,
            &[vec![2.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 2.0, 1.0]],
        );
        let bad = pm(
            "bad",
            &src,
            &y,
            &[vec![2.0, 1.0, 0.0, 0.0], vec![2.0, 1.0, 0.0, 0.0]],
        );
        let o = rwa(&[good, bad], 0.25, 1).unwrap();
        assert_eq!(o.eligible_sources, vec!["A"]);
        assert_eq!(o.values, vec![1.0, 1.0]);
    }

    #[test]
    fn ranks() {
        assert_eq!(
            rank_values(&[0.3, 0.1, 0.2], Orientation::LowerIsBetter).unwrap(),
            vec![3.0, 1.0, 2.0]
        );
        assert_eq!(
            rank_values(&[0.3, 0.1, 0.3], Orientation::HigherIsBetter).unwrap(),
            vec![1.5, 3.0, 1.5]
        );
        let t = vec![vec![Some(1.0), Some(1.0)], vec![Some(0.1), Some(0.2)]];
        let r = average_ranks(&t, &[Orientation::LowerIsBetter; 2]).unwrap();
        assert_eq!(r, vec![1.25, 1.75]);
        assert!(average_ranks(&[vec![Some(1.0), None]], &[Orientation::LowerIsBetter]).is_err());
        assert!(average_ranks(&[vec![Some(1.0)]], &[Orientation::LowerIsBetter]).is_err());
    }

    #[test]
    fn hand_ranked_table() {
        // metric 0 lower-better, 1 higher-better, 2 lower-better
        let t = vec![
            vec![Some(0.5), Some(0.2), Some(0.9)],
            vec![Some(3.0), Some(1.0), Some(2.0)],
            vec![Some(7.0), Some(7.0), Some(1.0)],
        ];
        let o = [
            Orientation::LowerIsBetter,
            Orientation::HigherIsBetter,
            Orientation::LowerIsBetter,
        ];
        let r = average_ranks(&t, &o).unwrap();
        // model0: 2,1,2.5 ; model1: 1,3,2.5 ; model2: 3,2,1
        let expect = [5.5 / 3.0, 6.5 / 3.0, 2.0];
        for (a, b) in r.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn report_and_tables() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let src = [0, 0, 1, 1];
        let a = pm(
            "a",
            &src,
            &y,
            &[vec![1.0, 2.0, 0.0, 0.0], vec![0.0, 0.0, 3.0, 4.0]],
        );
        let b = pm("b", &src, &y, &[vec![0.0; 4], vec![0.0; 4]]);
        let small: BTreeSet<String> = ["A".to_string()].into();
        let cfg = MetricConfig {
            q: 0.5,
            thresholds: vec![0.25, 0.5],
            min_count: 1,
        };
        let rep = evaluate(&[a, b], &small, &cfg).unwrap();
        // RWA ties at 1.5 since b's column B picks only A rows and drops B.
        assert_eq!(rep.eligible_sources, vec!["A"]);
        assert_eq!(rep.model("a").unwrap().rwa_rank, Some(1.5));
        assert!((rep.model("a").unwrap().average_rank - 3.5 / 3.0).abs() < 1e-15);
        assert!(rep.table_csv("tree").starts_with("model,tree_mse"));
        assert_eq!(rep.sweep_csv().lines().count(), 4);
    }

    #[test]
    fn csv_round_trip() {
        let m = pm(
            "a",
            &[0, 1, 1],
            &[1.0, 0.1, 2.5],
            &[vec![0.1, 1.0 / 3.0, -2.0], vec![1e-17, 5.0, 6.0]],
        );
        let back = PredictionMatrix::from_csv("a", &m.to_csv()).unwrap();
        assert_eq!(back, m);
    }
}
