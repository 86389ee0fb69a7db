//! WebAssembly bindings for the static demo page. Every export returns a
//! JSON string or throws the error message.

use ctrl_core::bench::default_learners;
use ctrl_core::cluster::{ClusterConfig, ClusterSearch};
use ctrl_core::dataset::{generate_synthetic, SynthConfig};
use ctrl_core::shift::{simulate_excess_risk, theoretical_excess_mean, ShiftSimConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(js_err)
}

#[derive(Serialize)]
struct CurvePoint {
    ratio: f64,
    pooled: f64,
    alone: f64,
}

/// Limiting scaled excess risk of pooling the target with one shifted
/// source of size `ratio * n_target`, for `steps + 1` ratios in
/// `[0, max_ratio]`, next to the target-only value.
#[wasm_bindgen]
pub fn theory_curve(
    k_cells: usize,
    leaves: usize,
    n_target: usize,
    shift_variance: f64,
    max_ratio: f64,
    steps: usize,
) -> Result<String, JsValue> {
    let alone = theoretical_excess_mean(&ShiftSimConfig::pooled(
        k_cells,
        leaves,
        n_target,
        &[],
        0.0,
        1,
    ))
    .map_err(js_err)?;
    let steps = steps.max(1);
    let mut points = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        let ratio = max_ratio * s as f64 / steps as f64;
        let other = (ratio * n_target as f64).round() as usize;
        let pooled = if other == 0 {
            alone
        } else {
            let cfg =
                ShiftSimConfig::pooled(k_cells, leaves, n_target, &[other], shift_variance, 1);
            theoretical_excess_mean(&cfg).map_err(js_err)?
        };
        points.push(CurvePoint {
            ratio,
            pooled,
            alone,
        });
    }
    to_json(&points)
}

/// Monte Carlo estimate at one pooling ratio.
#[wasm_bindgen]
pub fn simulate_point(
    k_cells: usize,
    leaves: usize,
    n_target: usize,
    n_other: usize,
    shift_variance: f64,
    replicates: usize,
    seed: u32,
) -> Result<String, JsValue> {
    let others: Vec<usize> = if n_other == 0 { vec![] } else { vec![n_other] };
    let mut cfg = ShiftSimConfig::pooled(
        k_cells,
        leaves,
        n_target,
        &others,
        shift_variance,
        replicates,
    );
    cfg.seed = seed as u64;
    to_json(&simulate_excess_risk(&cfg).map_err(js_err)?)
}

#[derive(Serialize)]
struct ClusterDemo {
    siblings: Vec<String>,
    report: ctrl_core::cluster::ClusterReport,
}

/// Cluster search for a small target `s00` planted in a cluster with `s01`
/// and `s02`, among `n_sources` sources of 200 rows each.
#[wasm_bindgen]
pub fn cluster_demo(
    n_sources: usize,
    target_size: usize,
    iterations: usize,
    seed: u32,
) -> Result<String, JsValue> {
    let mut sizes = vec![200; n_sources.max(4)];
    sizes[0] = target_size;
    let synth = SynthConfig {
        n_individuals: sizes.iter().sum(),
        n_sources: sizes.len(),
        feature_dim: 8,
        source_sizes: Some(sizes),
        planted_clusters: Some(vec![vec![0, 1, 2]]),
        ..SynthConfig::default()
    };
    let (ds, truth) = generate_synthetic(&synth, seed as u64).map_err(js_err)?;
    let learner = &default_learners()[0];
    let cfg = ClusterConfig {
        iterations,
        ..ClusterConfig::default()
    };
    let search = ClusterSearch::new(
        &ds,
        &learner.base,
        learner.residual_spec(),
        &cfg,
        seed as u64,
    )
    .map_err(js_err)?;
    let report = search.run_target("s00").map_err(js_err)?;
    to_json(&ClusterDemo {
        siblings: truth.siblings("s00"),
        report,
    })
}
