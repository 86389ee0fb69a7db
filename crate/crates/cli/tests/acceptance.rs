//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ctrl_core::baselines::{train_jtt, train_rwg, JttConfig};
use ctrl_core::bench::{default_learners, run_benchmark, RunConfig};
use ctrl_core::cluster::{
    one_se_rule, solve_subset, subset_objective, ClusterConfig, ClusterSearch, SubsetInstance,
};
use ctrl_core::dataset::{generate_synthetic, Dataset, SynthConfig};
use ctrl_core::eval::{average_ranks, mse, rwa, small_mse, Orientation, PredictionMatrix};
use ctrl_core::learners::LearnerSpec;
use ctrl_core::pipeline::{singleton_clusters, train_ctrl, train_global, train_trl, Predictor};
use ctrl_core::shift::{run_theory, TheoryConfig};
use ctrl_core::{seed, Error, Matrix};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- 1

/// Objective written out directly from the definition.
fn oracle_objective(r: &[f64], preds: &[Vec<f64>], sizes: &[f64], z: &[bool]) -> f64 {
    let denom: f64 = (0..z.len()).filter(|&m| z[m]).map(|m| sizes[m]).sum();
    let mut total = 0.0;
    for i in 0..r.len() {
        let mut num = 0.0;
        for m in 0..z.len() {
            if z[m] {
                num += preds[i][m] * sizes[m];
            }
        }
        let e = r[i] - num / denom;
        total += e * e;
    }
    total
}

fn all_subsets(c: usize, target: usize) -> Vec<Vec<bool>> {
    fn rec(m: usize, c: usize, target: usize, cur: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
        if m == c {
            out.push(cur.clone());
            return;
        }
        for on in [false, true] {
            if m == target && !on {
                continue;
            }
            cur.push(on);
            rec(m + 1, c, target, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, c, target, &mut Vec::new(), &mut out);
    out
}

fn draw<R: Rng>(rng: &mut R, coarse: bool) -> f64 {
    if coarse {
        rng.random_range(-2..=2) as f64 * 0.5
    } else {
        rng.random_range(-1.0..1.0)
    }
}

fn criterion_subset() -> Outcome {
    let start = Instant::now();
    let mut rng = seed::rng(101);
    let mut ties_exercised = 0;
    for inst_no in 0..1000 {
        let c = rng.random_range(1..=7usize);
        let v = rng.random_range(1..=25usize);
        let target = rng.random_range(0..c);
        let mut ids: Vec<String> = (0..c)
            .map(|m| format!("src{:02}", (m * 7 + inst_no) % 50))
            .collect();
        ids.dedup();
        if ids.len() != c {
            ids = (0..c).map(|m| format!("src{m:02}")).collect();
        }
        // Some instances use a coarse value grid or duplicate columns so that
        // ties occur and the tie rule is exercised.
        let coarse = inst_no % 4 == 0;
        let r: Vec<f64> = (0..v).map(|_| draw(&mut rng, coarse)).collect();
        let mut preds: Vec<Vec<f64>> = (0..v)
            .map(|_| (0..c).map(|_| draw(&mut rng, coarse)).collect())
            .collect();
        if inst_no % 5 == 1 && c > 1 {
            let (a, b) = (rng.random_range(0..c), rng.random_range(0..c));
            for row in preds.iter_mut() {
                row[b] = row[a];
            }
        }
        let sizes: Vec<f64> = (0..c)
            .map(|_| {
                if coarse {
                    10.0
                } else {
                    rng.random_range(1..=400) as f64
                }
            })
            .collect();
        let flat: Vec<f64> = preds.iter().flatten().copied().collect();
        let inst = SubsetInstance::new(
            ids.clone(),
            &ids[target],
            r.clone(),
            Matrix::from_vec(v, c, flat).unwrap(),
            sizes.clone(),
        )
        .unwrap();

        let mut best: Option<(f64, usize, Vec<&str>, Vec<bool>)> = None;
        let mut objectives = Vec::new();
        for z in all_subsets(c, target) {
            let obj = oracle_objective(&r, &preds, &sizes, &z);
            objectives.push(obj);
            let card = z.iter().filter(|&&b| b).count();
            let mut sel: Vec<&str> = (0..c).filter(|&m| z[m]).map(|m| ids[m].as_str()).collect();
            sel.sort();
            let replace = match &best {
                None => true,
                Some((bo, bc, bs, _)) => {
                    obj < *bo || (obj == *bo && (card < *bc || (card == *bc && sel < *bs)))
                }
            };
            if replace {
                best = Some((obj, card, sel, z));
            }
        }
        let optimum = best.as_ref().unwrap().0;
        if objectives.iter().filter(|&&o| o == optimum).count() > 1 {
            ties_exercised += 1;
        }
        let (oracle_obj, _, _, oracle_z) = best.unwrap();
        let z = solve_subset(&inst).unwrap();
        let obj = subset_objective(&inst, &z).unwrap();
        if obj != oracle_obj || z != oracle_z {
            return outcome(
                false,
                format!(
                    "instance {inst_no}: solver {obj} {z:?} vs oracle {oracle_obj} {oracle_z:?}"
                ),
            );
        }
    }
    let elapsed = start.elapsed();
    outcome(
        elapsed < Duration::from_secs(10),
        format!(
            "1000 instances match the oracle ({ties_exercised} with tied optima) in {elapsed:.2?}"
        ),
    )
}

// ---------------------------------------------------------------- 2

fn criterion_one_se() -> Outcome {
    // (means, ses, k_min, cutoff, k*)
    #[allow(clippy::type_complexity)]
    let battery: Vec<(Vec<f64>, Vec<f64>, usize, f64, usize)> = vec![
        (vec![0.5, 0.3, 0.29], vec![0.02; 3], 3, 0.31, 2),
        (vec![0.5, 0.4, 0.3, 0.2], vec![0.001; 4], 4, 0.201, 4),
        (vec![0.3, 0.3, 0.3], vec![0.0; 3], 1, 0.3, 1),
        (vec![0.31, 0.3, 0.2], vec![0.0, 0.0, 0.2], 3, 0.4, 1),
        (vec![1.0], vec![0.5], 1, 1.5, 1),
        (
            vec![0.4, 0.2, 0.2, 0.3],
            vec![0.1, 0.0, 0.05, 0.0],
            2,
            0.2,
            2,
        ),
        (
            vec![0.4, 0.2, 0.2, 0.3],
            vec![0.1, 0.05, 0.0, 0.0],
            2,
            0.25,
            2,
        ),
        (vec![0.75, 0.5, 0.25], vec![0.0, 0.0, 0.25], 3, 0.5, 2),
        (vec![0.75, 0.5, 0.25], vec![0.0, 0.0, 0.5], 3, 0.75, 1),
        (vec![0.75, 0.5, 0.25], vec![0.0, 0.0, 0.2499], 3, 0.4999, 3),
        (
            vec![2.0, 1.0, 3.0, 0.5, 0.6],
            vec![0.0, 0.0, 0.0, 0.1, 0.0],
            4,
            0.6,
            4,
        ),
        (
            vec![2.0, 1.0, 3.0, 0.5, 0.6],
            vec![0.0, 0.0, 0.0, 0.6, 0.0],
            4,
            1.1,
            2,
        ),
        (vec![0.0, 0.0, 0.0], vec![0.0; 3], 1, 0.0, 1),
        (vec![5.0, 4.0, 3.0, 2.0, 1.0, 0.0], vec![0.0; 6], 6, 0.0, 6),
        (vec![5.0, 4.0, 3.0, 2.0, 1.0, 0.0], vec![1.5; 6], 6, 1.5, 5),
        (vec![0.1, 0.2, 0.3], vec![1.0; 3], 1, 1.1, 1),
        (vec![0.3, 0.1, 0.1, 0.1], vec![0.0; 4], 2, 0.1, 2),
        (
            vec![0.3, 0.1, 0.05, 0.1],
            vec![0.0, 0.0, 0.05, 0.0],
            3,
            0.1,
            2,
        ),
        (
            vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1],
            vec![0.25; 10],
            10,
            0.35,
            8,
        ),
        (
            vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1],
            vec![0.0; 10],
            10,
            0.1,
            10,
        ),
        (
            vec![0.5, 0.5, 0.4, 0.5],
            vec![0.0, 0.0, 0.1, 0.0],
            3,
            0.5,
            1,
        ),
        (vec![-1.0, -2.0, -1.5], vec![0.25, 0.25, 0.75], 2, -1.75, 2),
        (vec![0.2, 0.19, 0.18], vec![0.005; 3], 3, 0.185, 3),
    ];
    for (n, (means, ses, k_min, cutoff, k_star)) in battery.iter().enumerate() {
        let got = one_se_rule(means, ses).unwrap();
        if got.k_min != *k_min || got.k_star != *k_star || (got.cutoff - cutoff).abs() > 1e-12 {
            return outcome(
                false,
                format!("curve {n}: got {got:?}, expected ({k_min}, {cutoff}, {k_star})"),
            );
        }
    }
    outcome(
        true,
        format!("{} hand-computed curves match", battery.len()),
    )
}

// ---------------------------------------------------------------- 3

fn bits(p: &Predictor, ds: &Dataset) -> Vec<u64> {
    PredictionMatrix::from_predictor("m", p, ds)
        .unwrap()
        .predictions
        .as_slice()
        .iter()
        .map(|v| v.to_bits())
        .collect()
}

fn criterion_reductions() -> Outcome {
    let mut cfg = SynthConfig {
        n_individuals: 500,
        n_sources: 10,
        feature_dim: 5,
        min_source_size: 20,
        max_source_size: 100,
        ..SynthConfig::default()
    };
    let (ds, _) = generate_synthetic(&cfg, 17).unwrap();
    cfg.source_sizes = Some(vec![50; 10]);
    let (equal, _) = generate_synthetic(&cfg, 17).unwrap();
    let mut checks = Vec::new();
    for (name, spec) in [
        ("forest", LearnerSpec::forest(20, 4, 3).with_salt(5)),
        ("tree", LearnerSpec::tree(4, 5)),
        ("ridge", LearnerSpec::ridge(1.0)),
    ] {
        let trl = train_trl(&ds, &spec, &spec).unwrap();
        let ctrl = train_ctrl(&ds, &spec, &spec, &singleton_clusters(&ds)).unwrap();
        checks.push((
            format!("{name}: singleton CTRL = TRL"),
            bits(&trl, &ds) == bits(&ctrl, &ds),
        ));
        let global = train_global(&ds, &spec).unwrap();
        let jtt = train_jtt(
            &ds,
            &spec,
            &JttConfig {
                error_fraction: 0.2,
                upweight: 1.0,
            },
        )
        .unwrap();
        checks.push((
            format!("{name}: JTT(mu=1) = global"),
            bits(&global, &ds) == bits(&jtt, &ds),
        ));
        let g_eq = train_global(&equal, &spec).unwrap();
        let rwg = train_rwg(&equal, &spec).unwrap();
        checks.push((
            format!("{name}: RWG(equal sizes) = global"),
            bits(&g_eq, &equal) == bits(&rwg, &equal),
        ));
    }
    let failed: Vec<&String> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| n)
        .collect();
    if failed.is_empty() {
        outcome(
            true,
            format!("{} identities bit-exact on 500 rows", checks.len()),
        )
    } else {
        outcome(false, format!("not bit-exact: {failed:?}"))
    }
}

// ---------------------------------------------------------------- 4

fn oracle_mse(p: &[f64], y: &[f64]) -> f64 {
    let sq: Vec<f64> = p.iter().zip(y).map(|(a, b)| (a - b).powi(2)).collect();
    let mut s = 0.0;
    for v in &sq {
        s += v;
    }
    s / sq.len() as f64
}

/// `None` when no source qualifies.
fn oracle_rwa(ms: &[PredictionMatrix], tenths: usize, min_count: usize) -> Option<Vec<f64>> {
    let n = ms[0].n_rows();
    let k = (tenths * n).div_ceil(10);
    let s = ms[0].sources.len();
    let in_top = |m: &PredictionMatrix, g: usize, i: usize| {
        let pi = m.predictions.get(i, g);
        let ahead = (0..n)
            .filter(|&j| {
                let pj = m.predictions.get(j, g);
                pj > pi || (pj == pi && j < i)
            })
            .count();
        ahead < k
    };
    let eligible = |m: &PredictionMatrix, g: usize| -> Vec<usize> {
        (0..n)
            .filter(|&i| m.row_source[i] == g && in_top(m, g, i))
            .collect()
    };
    let kept: Vec<usize> = (0..s)
        .filter(|&g| ms.iter().all(|m| eligible(m, g).len() >= min_count))
        .collect();
    if kept.is_empty() {
        return None;
    }
    Some(
        ms.iter()
            .map(|m| {
                let rows: Vec<usize> = kept.iter().flat_map(|&g| eligible(m, g)).collect();
                rows.iter().map(|&i| m.outcome[i]).sum::<f64>() / rows.len() as f64
            })
            .collect(),
    )
}

fn oracle_rank(values: &[f64], i: usize, higher_better: bool) -> f64 {
    let better = values
        .iter()
        .filter(|&&v| {
            if higher_better {
                v > values[i]
            } else {
                v < values[i]
            }
        })
        .count();
    let tied = values.iter().filter(|&&v| v == values[i]).count() - 1;
    1.0 + better as f64 + tied as f64 / 2.0
}

fn criterion_metrics() -> Outcome {
    let mut rng = seed::rng(202);
    let mut rwa_absent = 0;
    for inst in 0..1000 {
        let n = rng.random_range(5..=40usize);
        let s = rng.random_range(2..=4usize);
        let n_models = rng.random_range(1..=4usize);
        let sources: Vec<String> = (0..s).map(|g| format!("g{g}")).collect();
        let row_source: Vec<usize> = (0..n).map(|_| rng.random_range(0..s)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..=1) as f64).collect();
        let ms: Vec<PredictionMatrix> = (0..n_models)
            .map(|j| {
                let data: Vec<f64> = (0..n * s)
                    .map(|_| rng.random_range(0..=8) as f64 / 8.0)
                    .collect();
                PredictionMatrix::new(
                    format!("m{j}"),
                    sources.clone(),
                    row_source.clone(),
                    y.clone(),
                    Matrix::from_vec(n, s, data).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);

        for m in &ms {
            let own = m.own();
            if !close(mse(&own, &y).unwrap(), oracle_mse(&own, &y)) {
                return outcome(false, format!("instance {inst}: mse"));
            }
            let small: BTreeSet<String> = sources
                .iter()
                .take(rng.random_range(1..=s))
                .cloned()
                .collect();
            let rows: Vec<usize> = (0..n)
                .filter(|&i| small.contains(&sources[row_source[i]]))
                .collect();
            let got = small_mse(m, &small);
            if rows.is_empty() {
                if got.is_ok() {
                    return outcome(false, format!("instance {inst}: small_mse should fail"));
                }
            } else {
                let p: Vec<f64> = rows.iter().map(|&i| own[i]).collect();
                let t: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
                if !close(got.unwrap(), oracle_mse(&p, &t)) {
                    return outcome(false, format!("instance {inst}: small_mse"));
                }
            }
        }

        let tenths = rng.random_range(1..=10usize);
        let min_count = rng.random_range(1..=3usize);
        match (
            rwa(&ms, tenths as f64 / 10.0, min_count),
            oracle_rwa(&ms, tenths, min_count),
        ) {
            (Ok(o), Some(expect)) => {
                if o.values.iter().zip(&expect).any(|(a, b)| !close(*a, *b)) {
                    return outcome(
                        false,
                        format!("instance {inst}: rwa {:?} vs {expect:?}", o.values),
                    );
                }
            }
            (Err(Error::EmptyEligibleSet), None) => rwa_absent += 1,
            (got, expect) => {
                return outcome(false, format!("instance {inst}: rwa {got:?} vs {expect:?}"))
            }
        }

        if n_models >= 2 {
            let n_metrics = rng.random_range(1..=3usize);
            let table: Vec<Vec<Option<f64>>> = (0..n_metrics)
                .map(|_| {
                    (0..n_models)
                        .map(|_| Some(rng.random_range(0..=3) as f64))
                        .collect()
                })
                .collect();
            let orient: Vec<Orientation> = (0..n_metrics)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        Orientation::HigherIsBetter
                    } else {
                        Orientation::LowerIsBetter
                    }
                })
                .collect();
            let got = average_ranks(&table, &orient).unwrap();
            for (j, g) in got.iter().enumerate() {
                let mut total = 0.0;
                for (row, o) in table.iter().zip(&orient) {
                    let vals: Vec<f64> = row.iter().map(|v| v.unwrap()).collect();
                    total += oracle_rank(&vals, j, *o == Orientation::HigherIsBetter);
                }
                if *g != total / n_metrics as f64 {
                    return outcome(false, format!("instance {inst}: average rank"));
                }
            }
        }
    }
    outcome(
        true,
        format!("1000 instances match ({rwa_absent} with empty eligible set)"),
    )
}

// ---------------------------------------------------------------- 5

fn criterion_theory() -> Outcome {
    let start = Instant::now();
    let results = run_theory(&TheoryConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let parts: Vec<String> = results
        .iter()
        .map(|r| {
            format!(
                "{}: {:.3}±{:.3} vs {:.3} ({:.1}%)",
                r.name,
                r.estimate.empirical_mean,
                r.estimate.standard_error,
                r.estimate.theory,
                100.0 * r.estimate.relative_gap
            )
        })
        .collect();
    let ok = results
        .iter()
        .all(|r| r.estimate.within_3se && r.estimate.relative_gap < 0.1);
    outcome(
        ok && elapsed < Duration::from_secs(300),
        format!("{}; {elapsed:.1?}", parts.join("; ")),
    )
}

// ---------------------------------------------------------------- 6

fn criterion_desk() -> Outcome {
    let start = Instant::now();
    let mut sums = BTreeMap::<&str, f64>::new();
    let mut best_rank_seeds = 0;
    for s in 0..5u64 {
        let synth = SynthConfig {
            n_individuals: 4000,
            n_sources: 20,
            min_source_size: 20,
            max_source_size: 400,
            global_weight: 0.3,
            local_weight: 0.7,
            ..SynthConfig::default()
        };
        let mut cfg = RunConfig::synthetic(synth, s);
        cfg.cluster.iterations = 50;
        cfg.metrics.q = 0.2;
        cfg.metrics.min_count = 3;
        let run = run_benchmark(&cfg, &|_| {}).unwrap();
        let e = run.report.learner("tree").unwrap();
        let m = |name: &str| e.model(name).unwrap();
        *sums.entry("ctrl_small").or_default() += m("ctrl").small_mse;
        *sums.entry("local_small").or_default() += m("local").small_mse;
        *sums.entry("trl_small").or_default() += m("trl").small_mse;
        *sums.entry("ctrl_rwa").or_default() += m("ctrl").rwa.unwrap_or(f64::NAN);
        *sums.entry("global_rwa").or_default() += m("global").rwa.unwrap_or(f64::NAN);
        let best = e
            .models
            .iter()
            .map(|x| x.average_rank)
            .fold(f64::INFINITY, f64::min);
        if m("ctrl").average_rank <= best {
            best_rank_seeds += 1;
        }
    }
    let elapsed = start.elapsed();
    let avg = |k: &str| sums[k] / 5.0;
    let a = avg("ctrl_small") < avg("local_small");
    let b = avg("ctrl_small") <= avg("trl_small");
    let c = avg("ctrl_rwa") >= avg("global_rwa");
    let d = best_rank_seeds >= 3;
    outcome(
        a && b && c && d && elapsed < Duration::from_secs(1800),
        format!(
            "(a) ctrl small {:.4} < local {:.4}: {a}; (b) <= trl {:.4}: {b}; (c) ctrl rwa {:.4} >= global {:.4}: {c}; (d) best rank in {best_rank_seeds}/5: {d}; {elapsed:.1?}",
            avg("ctrl_small"),
            avg("local_small"),
            avg("trl_small"),
            avg("ctrl_rwa"),
            avg("global_rwa")
        ),
    )
}

// ---------------------------------------------------------------- 7

fn criterion_recovery() -> Outcome {
    let mut hits = 0;
    let mut sizes = Vec::new();
    let learner = &default_learners()[0];
    for s in 0..10u64 {
        let mut source_sizes = vec![300; 10];
        source_sizes[0] = 60;
        let synth = SynthConfig {
            n_individuals: source_sizes.iter().sum(),
            n_sources: 10,
            source_sizes: Some(source_sizes),
            planted_clusters: Some(vec![vec![0, 1, 2]]),
            ..SynthConfig::default()
        };
        let (ds, truth) = generate_synthetic(&synth, 1000 + s).unwrap();
        let base = learner.base.clone().with_salt(s);
        let resid = learner.residual_spec().clone().with_salt(s);
        let search = ClusterSearch::new(&ds, &base, &resid, &ClusterConfig::default(), s).unwrap();
        let report = search.run_target("s00").unwrap();
        let siblings = truth.siblings("s00");
        if report.cluster.iter().any(|c| siblings.contains(c)) {
            hits += 1;
        }
        sizes.push(report.cluster.len());
    }
    outcome(
        hits >= 7,
        format!("planted sibling recovered in {hits}/10 seeds (cluster sizes {sizes:?})"),
    )
}

// ---------------------------------------------------------------- 8

fn tree_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                if rel != "run.log" {
                    out.insert(rel, std::fs::read(&path).unwrap());
                }
            }
        }
    }
    out
}

fn criterion_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.json");
    std::fs::write(
        &config,
        r#"{
  "data": {"kind": "synthetic", "config": {"n_individuals": 1200, "n_sources": 8, "feature_dim": 5,
           "min_source_size": 30, "max_source_size": 400}},
  "learners": [
    {"name": "tree", "base": {"kind": "tree", "max_depth": 5, "min_leaf": 5}, "residual": {"kind": "ridge", "ridge_penalty": 10.0}},
    {"name": "forest", "base": {"kind": "forest", "n_trees": 8, "max_depth": 4, "min_leaf": 5}}
  ],
  "cluster": {"iterations": 8, "candidate_count": 5, "k_max": 5},
  "metrics": {"min_count": 2}
}"#,
    )
    .unwrap();
    let mut trees = Vec::new();
    for (run, workers) in [(0, 1), (1, 1), (2, 8)] {
        let out = tmp.path().join(format!("out{run}"));
        let status = Command::new(env!("CARGO_BIN_EXE_ctrl"))
            .args(["benchmark", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "7", "--workers", &workers.to_string()])
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(
                false,
                format!(
                    "benchmark failed: {}",
                    String::from_utf8_lossy(&status.stderr)
                ),
            );
        }
        trees.push(tree_files(&out));
    }
    let same = trees[0] == trees[1] && trees[0] == trees[2];
    outcome(
        same && trees[0].len() > 10,
        format!(
            "{} output files identical across 2 runs and workers 1 vs 8: {same}",
            trees[0].len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        (
            "1 subset solver matches enumeration oracle",
            criterion_subset,
        ),
        ("2 one-SE rule battery", criterion_one_se),
        ("3 reduction identities bit-exact", criterion_reductions),
        ("4 metric oracles", criterion_metrics),
        ("5 excess-risk Monte Carlo vs closed form", criterion_theory),
        ("6 desk-scale benchmark direction", criterion_desk),
        ("7 planted cluster recovery", criterion_recovery),
        ("8 benchmark determinism", criterion_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
