//! Synthetic multi-source binary-outcome generator.
//!
//! Source sizes follow a truncated Pareto law rescaled to the requested
//! population. A random subset of sources is partitioned into latent clusters
//! whose members share a base local weight vector up to a small Gaussian
//! shift; the remaining sources get independent weights and their own
//! feature means and scales. Each row's success probability is
//! `sigmoid(global_weight * w_glob·x + local_weight * w_src·x)`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_individuals: usize,
    pub n_sources: usize,
    pub feature_dim: usize,
    pub global_weight: f64,
    pub local_weight: f64,
    pub min_source_size: usize,
    pub max_source_size: usize,
    pub cluster_size_range: (usize, usize),
    pub pareto_shape: f64,
    /// Share of sources placed into latent clusters.
    pub clustered_fraction: f64,
    /// Std. dev. of per-source feature mean shifts and log-scale shifts for
    /// non-clustered sources.
    pub feature_shift_sd: f64,
    /// Per-coordinate std. dev. of a cluster member's deviation from the
    /// cluster's base weight vector.
    pub weight_shift_sd: f64,
    /// Weight vectors have i.i.d. N(0, signal_scale² / feature_dim) entries.
    pub signal_scale: f64,
    /// Explicit per-source sizes, overriding the Pareto draw.
    pub source_sizes: Option<Vec<usize>>,
    /// Explicit latent clusters as lists of source positions, overriding the
    /// random partition.
    pub planted_clusters: Option<Vec<Vec<usize>>>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_individuals: 40_000,
            n_sources: 50,
            feature_dim: 20,
            global_weight: 0.3,
            local_weight: 0.7,
            min_source_size: 40,
            max_source_size: 2000,
            cluster_size_range: (2, 7),
            pareto_shape: 1.5,
            clustered_fraction: 0.5,
            feature_shift_sd: 0.3,
            weight_shift_sd: 0.1,
            signal_scale: 2.0,
            source_sizes: None,
            planted_clusters: None,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.n_sources == 0 {
            return Err(Error::config("n_sources", "must be at least 1"));
        }
        if self.feature_dim == 0 {
            return Err(Error::config("feature_dim", "must be at least 1"));
        }
        if !unit(self.global_weight) {
            return Err(Error::config("global_weight", "must lie in [0, 1]"));
        }
        if !unit(self.local_weight) {
            return Err(Error::config("local_weight", "must lie in [0, 1]"));
        }
        if (self.global_weight + self.local_weight - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "local_weight",
                format!(
                    "global_weight + local_weight must equal 1, got {}",
                    self.global_weight + self.local_weight
                ),
            ));
        }
        if self.min_source_size < 2 {
            return Err(Error::config("min_source_size", "must be at least 2"));
        }
        if self.max_source_size < self.min_source_size {
            return Err(Error::config(
                "max_source_size",
                "must be >= min_source_size",
            ));
        }
        let (lo, hi) = self.cluster_size_range;
        if lo < 2 || hi < lo {
            return Err(Error::config("cluster_size_range", "need 2 <= low <= high"));
        }
        if !(self.pareto_shape > 0.0) {
            return Err(Error::config("pareto_shape", "must be positive"));
        }
        if !unit(self.clustered_fraction) {
            return Err(Error::config("clustered_fraction", "must lie in [0, 1]"));
        }
        for (name, v) in [
            ("feature_shift_sd", self.feature_shift_sd),
            ("weight_shift_sd", self.weight_shift_sd),
            ("signal_scale", self.signal_scale),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be finite and nonnegative"));
            }
        }
        match &self.source_sizes {
            Some(sizes) => {
                if sizes.len() != self.n_sources {
                    return Err(Error::config("source_sizes", "length must equal n_sources"));
                }
                if sizes.iter().any(|&s| s < 2) {
                    return Err(Error::config(
                        "source_sizes",
                        "every size must be at least 2",
                    ));
                }
            }
            None => {
                let lo_total = self.n_sources.saturating_mul(self.min_source_size);
                let hi_total = self.n_sources.saturating_mul(self.max_source_size);
                if lo_total > self.n_individuals || hi_total < self.n_individuals {
                    return Err(Error::config(
                        "n_individuals",
                        format!(
                            "infeasible: {} sources with sizes in [{}, {}] cannot total {}",
                            self.n_sources,
                            self.min_source_size,
                            self.max_source_size,
                            self.n_individuals
                        ),
                    ));
                }
            }
        }
        if let Some(clusters) = &self.planted_clusters {
            let mut seen = vec![false; self.n_sources];
            for c in clusters {
                if c.is_empty() {
                    return Err(Error::config(
                        "planted_clusters",
                        "clusters must be nonempty",
                    ));
                }
                for &m in c {
                    if m >= self.n_sources || seen[m] {
                        return Err(Error::config(
                            "planted_clusters",
                            "clusters must be disjoint lists of valid source positions",
                        ));
                    }
                    seen[m] = true;
                }
            }
        }
        Ok(())
    }

    pub fn source_ids(&self) -> Vec<String> {
        let width = (self.n_sources.saturating_sub(1)).to_string().len().max(2);
        (0..self.n_sources)
            .map(|i| format!("s{i:0width$}"))
            .collect()
    }
}

/// Latent structure behind a generated dataset; written as the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SynthConfig,
    pub seed: u64,
    pub source_sizes: BTreeMap<String, usize>,
    pub clusters: Vec<Vec<String>>,
    /// Index into `clusters` for each clustered source.
    pub cluster_of: BTreeMap<String, usize>,
    pub global_weights: Vec<f64>,
    pub local_weights: BTreeMap<String, Vec<f64>>,
}

impl GroundTruth {
    /// Planted cluster-mates of `source`, excluding itself.
    pub fn siblings(&self, source: &str) -> Vec<String> {
        match self.cluster_of.get(source) {
            Some(&c) => self.clusters[c]
                .iter()
                .filter(|s| s.as_str() != source)
                .cloned()
                .collect(),
            None => Vec::new(),
        }
    }
}

/// Inverse-CDF draw from a Pareto(shape, scale = lo) truncated to [lo, hi].
fn truncated_pareto<R: Rng>(rng: &mut R, shape: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let u: f64 = rng.random();
    let tail = 1.0 - (lo / hi).powf(shape);
    lo / (1.0 - u * tail).powf(1.0 / shape)
}

/// Rescales raw draws so the clamped sizes total exactly `total`.
fn fit_sizes(raw: &[f64], lo: usize, hi: usize, total: usize) -> Vec<usize> {
    let clamped_sum = |s: f64| -> f64 {
        raw.iter()
            .map(|r| (r * s).clamp(lo as f64, hi as f64))
            .sum()
    };
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    while clamped_sum(b) < total as f64 && b < 1e12 {
        b *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if clamped_sum(mid) < total as f64 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let real: Vec<f64> = raw
        .iter()
        .map(|r| (r * b).clamp(lo as f64, hi as f64))
        .collect();
    let mut sizes: Vec<usize> = real.iter().map(|v| v.floor() as usize).collect();
    let mut sum: usize = sizes.iter().sum();
    // Hand out the rounding remainder by largest fractional part, then by position.
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = real[i] - real[i].floor();
        let fj = real[j] - real[j].floor();
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    while sum < total {
        let before = sum;
        for &i in &order {
            if sum == total {
                break;
            }
            if sizes[i] < hi {
                sizes[i] += 1;
                sum += 1;
            }
        }
        if sum == before {
            break;
        }
    }
    while sum > total {
        let before = sum;
        for &i in order.iter().rev() {
            if sum == total {
                break;
            }
            if sizes[i] > lo {
                sizes[i] -= 1;
                sum -= 1;
            }
        }
        if sum == before {
            break;
        }
    }
    sizes
}

fn random_clusters<R: Rng>(rng: &mut R, cfg: &SynthConfig) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..cfg.n_sources).collect();
    order.shuffle(rng);
    let (lo, hi) = cfg.cluster_size_range;
    let mut remaining = (cfg.clustered_fraction * cfg.n_sources as f64).round() as usize;
    let mut next = 0;
    let mut clusters = Vec::new();
    while remaining >= lo {
        let mut size = rng.random_range(lo..=hi.min(remaining));
        let left = remaining - size;
        if left > 0 && left < lo {
            // Avoid stranding fewer than `lo` sources at the end.
            size = if remaining <= hi {
                remaining
            } else {
                remaining - lo
            };
        }
        let mut members = order[next..next + size].to_vec();
        members.sort_unstable();
        clusters.push(members);
        next += size;
        remaining -= size;
    }
    clusters
}

fn gaussian_vec<R: Rng>(rng: &mut R, d: usize, sd: f64) -> Vec<f64> {
    (0..d)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Generates a dataset together with its latent ground truth. Deterministic
/// in `(cfg, seed)`.
pub fn generate_synthetic(cfg: &SynthConfig, seed: u64) -> Result<(Dataset, GroundTruth)> {
    cfg.validate()?;
    let ids = cfg.source_ids();
    let d = cfg.feature_dim;

    let sizes = match &cfg.source_sizes {
        Some(s) => s.clone(),
        None => {
            let mut rng = seed::rng(seed::derive(seed, "synth-sizes", &[]));
            let raw: Vec<f64> = (0..cfg.n_sources)
                .map(|_| {
                    truncated_pareto(
                        &mut rng,
                        cfg.pareto_shape,
                        cfg.min_source_size as f64,
                        cfg.max_source_size as f64,
                    )
                })
                .collect();
            fit_sizes(
                &raw,
                cfg.min_source_size,
                cfg.max_source_size,
                cfg.n_individuals,
            )
        }
    };

    let clusters = match &cfg.planted_clusters {
        Some(c) => c.clone(),
        None => {
            let mut rng = seed::rng(seed::derive(seed, "synth-clusters", &[]));
            random_clusters(&mut rng, cfg)
        }
    };
    let mut cluster_of = vec![None; cfg.n_sources];
    for (ci, members) in clusters.iter().enumerate() {
        for &m in members {
            cluster_of[m] = Some(ci);
        }
    }

    let weight_sd = cfg.signal_scale / (d as f64).sqrt();
    let mut wrng = seed::rng(seed::derive(seed, "synth-weights", &[]));
    let global_weights = gaussian_vec(&mut wrng, d, weight_sd);
    let cluster_bases: Vec<Vec<f64>> = clusters
        .iter()
        .map(|_| gaussian_vec(&mut wrng, d, weight_sd))
        .collect();
    let mut local_weights = Vec::with_capacity(cfg.n_sources);
    let mut feature_shape = Vec::with_capacity(cfg.n_sources);
    for m in 0..cfg.n_sources {
        match cluster_of[m] {
            Some(c) => {
                let shift = gaussian_vec(&mut wrng, d, cfg.weight_shift_sd);
                local_weights.push(
                    cluster_bases[c]
                        .iter()
                        .zip(&shift)
                        .map(|(b, s)| b + s)
                        .collect::<Vec<_>>(),
                );
                feature_shape.push((vec![0.0; d], vec![1.0; d]));
            }
            None => {
                local_weights.push(gaussian_vec(&mut wrng, d, weight_sd));
                let means = gaussian_vec(&mut wrng, d, cfg.feature_shift_sd);
                let scales = gaussian_vec(&mut wrng, d, cfg.feature_shift_sd)
                    .into_iter()
                    .map(f64::exp)
                    .collect();
                feature_shape.push((means, scales));
            }
        }
    }

    let n: usize = sizes.iter().sum();
    let mut data = Vec::with_capacity(n * d);
    let mut outcome = Vec::with_capacity(n);
    let mut row_ids = Vec::with_capacity(n);
    for m in 0..cfg.n_sources {
        let mut rng = seed::rng(seed::derive(seed, "synth-rows", &[ids[m].as_str().into()]));
        let (means, scales) = &feature_shape[m];
        for _ in 0..sizes[m] {
            let start = data.len();
            for j in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                data.push(means[j] + scales[j] * z);
            }
            let x = &data[start..];
            let g: f64 = x.iter().zip(&global_weights).map(|(a, b)| a * b).sum();
            let l: f64 = x.iter().zip(&local_weights[m]).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-(cfg.global_weight * g + cfg.local_weight * l)).exp());
            let y = Bernoulli::new(p.clamp(0.0, 1.0))
                .expect("probability in [0, 1]")
                .sample(&mut rng);
            outcome.push(if y { 1.0 } else { 0.0 });
            row_ids.push(ids[m].clone());
        }
    }
    let names = (0..d).map(|j| format!("x{j}")).collect();
    let ds = Dataset::new(Matrix::from_vec(n, d, data)?, outcome, &row_ids, names)?;

    let truth = GroundTruth {
        config: cfg.clone(),
        seed,
        source_sizes: ids.iter().cloned().zip(sizes.iter().copied()).collect(),
        clusters: clusters
            .iter()
            .map(|c| c.iter().map(|&m| ids[m].clone()).collect())
            .collect(),
        cluster_of: cluster_of
            .iter()
            .enumerate()
            .filter_map(|(m, c)| c.map(|c| (ids[m].clone(), c)))
            .collect(),
        global_weights,
        local_weights: ids.iter().cloned().zip(local_weights).collect(),
    };
    Ok((ds, truth))
}
