//! Monte Carlo check of the excess risk of pooled leaf-mean estimators under
//! random distribution shift.
//!
//! The feature space is a grid of `k_cells` cells nested evenly in `leaves`
//! leaves. The target draws cells uniformly; source `m` tilts that by i.i.d.
//! positive weights with mean 1 and variance `shift_variance`. Every cell
//! carries a fixed outcome, so a leaf's outcome variance under the target is
//! exactly the configured leaf variance. A cluster estimates each leaf mean by
//! the size-weighted average of its members' sample leaf means; the excess
//! risk is the target-weighted squared error of those estimates.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSource {
    pub n: usize,
    /// Variance of the tilt weights; 0 means no shift.
    #[serde(default)]
    pub shift_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSimConfig {
    pub k_cells: usize,
    pub leaves: usize,
    /// Target first; its shift variance must be 0.
    pub sources: Vec<SimSource>,
    /// Outcome mean per leaf; defaults to `0, 1, 2, ...`.
    #[serde(default)]
    pub leaf_means: Option<Vec<f64>>,
    /// Outcome variance per leaf under the target; defaults to all ones.
    #[serde(default)]
    pub leaf_variances: Option<Vec<f64>>,
    /// Positions into `sources` pooled for the estimate; must include 0.
    pub cluster: Vec<usize>,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ShiftSimConfig {
    /// Target of size `n_target` pooled with sources of the given sizes, all
    /// shifted by `shift_variance`.
    pub fn pooled(
        k_cells: usize,
        leaves: usize,
        n_target: usize,
        others: &[usize],
        shift_variance: f64,
        replicates: usize,
    ) -> Self {
        let mut sources = vec![SimSource {
            n: n_target,
            shift_variance: 0.0,
        }];
        sources.extend(others.iter().map(|&n| SimSource { n, shift_variance }));
        ShiftSimConfig {
            k_cells,
            leaves,
            cluster: (0..sources.len()).collect(),
            sources,
            leaf_means: None,
            leaf_variances: None,
            replicates,
            seed: 0,
        }
    }

    pub fn leaf_means(&self) -> Vec<f64> {
        self.leaf_means
            .clone()
            .unwrap_or_else(|| (0..self.leaves).map(|l| l as f64).collect())
    }

    pub fn leaf_variances(&self) -> Vec<f64> {
        self.leaf_variances
            .clone()
            .unwrap_or_else(|| vec![1.0; self.leaves])
    }

    fn cells_per_leaf(&self) -> usize {
        self.k_cells / self.leaves
    }

    pub fn validate(&self) -> Result<()> {
        if self.leaves == 0 {
            return Err(Error::config("leaves", "must be at least 1"));
        }
        if self.k_cells == 0 || self.k_cells % self.leaves != 0 {
            return Err(Error::config(
                "k_cells",
                "must be a positive multiple of leaves",
            ));
        }
        if self.replicates == 0 {
            return Err(Error::config("replicates", "must be at least 1"));
        }
        if self.sources.is_empty() {
            return Err(Error::config("sources", "needs at least the target"));
        }
        for s in &self.sources {
            if s.n == 0 {
                return Err(Error::config("sources", "every source needs n >= 1"));
            }
            if !(s.shift_variance >= 0.0 && s.shift_variance.is_finite()) {
                return Err(Error::config("shift_variance", "must be finite and >= 0"));
            }
        }
        if self.sources[0].shift_variance != 0.0 {
            return Err(Error::config(
                "shift_variance",
                "the target (first source) is unshifted",
            ));
        }
        if !self.cluster.contains(&0) {
            return Err(Error::config(
                "cluster",
                "must contain the target (position 0)",
            ));
        }
        let mut sorted = self.cluster.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.cluster.len() || sorted.iter().any(|&m| m >= self.sources.len()) {
            return Err(Error::config(
                "cluster",
                "positions must be distinct and within sources",
            ));
        }
        let means = self.leaf_means();
        let vars = self.leaf_variances();
        if means.len() != self.leaves || means.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(
                "leaf_means",
                "needs one finite value per leaf",
            ));
        }
        if vars.len() != self.leaves || vars.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::config(
                "leaf_variances",
                "needs one finite value >= 0 per leaf",
            ));
        }
        if self.cells_per_leaf() < 2 && vars.iter().any(|&v| v > 0.0) {
            return Err(Error::config(
                "k_cells",
                "a leaf with positive variance needs at least two cells",
            ));
        }
        Ok(())
    }

    /// Outcome of each cell; cells `l*c .. (l+1)*c` form leaf `l`.
    fn cell_values(&self) -> Vec<f64> {
        let c = self.cells_per_leaf();
        let means = self.leaf_means();
        let vars = self.leaf_variances();
        // Evenly spaced offsets with mean 0 and population variance 1.
        let centre = (c as f64 - 1.0) / 2.0;
        let spread = if c > 1 {
            ((c * c - 1) as f64 / 12.0).sqrt()
        } else {
            1.0
        };
        let mut out = Vec::with_capacity(self.k_cells);
        for l in 0..self.leaves {
            for j in 0..c {
                out.push(means[l] + vars[l].sqrt() * (j as f64 - centre) / spread);
            }
        }
        out
    }
}

/// Size shares of the cluster members; zero outside the cluster.
pub fn cluster_beta(cluster: &[usize], n_star: &[f64]) -> Result<Vec<f64>> {
    if cluster.is_empty() {
        return Err(Error::Invalid("empty cluster".into()));
    }
    let mut total = 0.0;
    for &m in cluster {
        let v = *n_star.get(m).ok_or(Error::Dimension {
            expected: m + 1,
            got: n_star.len(),
        })?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Invalid(
                "cluster proportions must be positive".into(),
            ));
        }
        total += v;
    }
    let mut beta = vec![0.0; n_star.len()];
    for &m in cluster {
        beta[m] = n_star[m] / total;
    }
    Ok(beta)
}

/// Limiting mean of `K * excess`: `(sum b_m^2 s_m + sum b_m^2 K / n_m) * sum_L var_L`.
pub fn theoretical_excess_mean(cfg: &ShiftSimConfig) -> Result<f64> {
    cfg.validate()?;
    let n: Vec<f64> = cfg.sources.iter().map(|s| s.n as f64).collect();
    let beta = cluster_beta(&cfg.cluster, &n)?;
    let k = cfg.k_cells as f64;
    let mut factor = 0.0;
    for (m, s) in cfg.sources.iter().enumerate() {
        factor += beta[m] * beta[m] * (s.shift_variance + k / n[m]);
    }
    Ok(factor * cfg.leaf_variances().iter().sum::<f64>())
}

/// The sampling-only part of the theory (no shift).
fn sampling_term(cfg: &ShiftSimConfig) -> Result<f64> {
    let mut flat = cfg.clone();
    flat.sources.iter_mut().for_each(|s| s.shift_variance = 0.0);
    theoretical_excess_mean(&flat)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessRiskEstimate {
    pub replicates: usize,
    /// Mean of `K * excess` over replicates.
    pub empirical_mean: f64,
    pub standard_error: f64,
    pub theory: f64,
    /// `|empirical - theory| / theory`; 0 when both are 0.
    pub relative_gap: f64,
    /// Empirical mean minus the theoretical sampling term.
    pub shift_penalty: f64,
    pub within_3se: bool,
}

impl ExcessRiskEstimate {
    pub fn passes(&self, max_relative_gap: f64) -> bool {
        self.within_3se && self.relative_gap <= max_relative_gap
    }
}

/// Excess risk of one replicate, unscaled.
fn replicate_excess(cfg: &ShiftSimConfig, cells: &[f64], rep_seed: u64) -> Result<f64> {
    let c = cfg.cells_per_leaf();
    let leaves = cfg.leaves;
    let means = cfg.leaf_means();
    let mut sums = vec![vec![0.0; leaves]; cfg.cluster.len()];
    let mut counts = vec![vec![0usize; leaves]; cfg.cluster.len()];
    for (slot, &m) in cfg.cluster.iter().enumerate() {
        let src = &cfg.sources[m];
        let mut rng = seed::rng(seed::derive(rep_seed, "source", &[m.into()]));
        if src.shift_variance == 0.0 {
            for _ in 0..src.n {
                let k = rng.random_range(0..cfg.k_cells);
                sums[slot][k / c] += cells[k];
                counts[slot][k / c] += 1;
            }
        } else {
            let gamma = Gamma::new(1.0 / src.shift_variance, src.shift_variance)
                .map_err(|e| Error::config("shift_variance", e.to_string()))?;
            let mut cumulative = Vec::with_capacity(cfg.k_cells);
            let mut acc = 0.0;
            for _ in 0..cfg.k_cells {
                acc += gamma.sample(&mut rng);
                cumulative.push(acc);
            }
            for _ in 0..src.n {
                let u = rng.random::<f64>() * acc;
                let k = cumulative.partition_point(|&v| v <= u).min(cfg.k_cells - 1);
                sums[slot][k / c] += cells[k];
                counts[slot][k / c] += 1;
            }
        }
    }
    let mut pooled_sum = 0.0;
    let mut pooled_n = 0usize;
    for slot in 0..cfg.cluster.len() {
        pooled_sum += sums[slot].iter().sum::<f64>();
        pooled_n += counts[slot].iter().sum::<usize>();
    }
    let fallback = pooled_sum / pooled_n as f64;
    let mut excess = 0.0;
    for l in 0..leaves {
        let (mut num, mut den) = (0.0, 0.0);
        for (slot, &m) in cfg.cluster.iter().enumerate() {
            if counts[slot][l] > 0 {
                let size = cfg.sources[m].n as f64;
                num += size * sums[slot][l] / counts[slot][l] as f64;
                den += size;
            }
        }
        let est = if den > 0.0 { num / den } else { fallback };
        excess += (means[l] - est) * (means[l] - est) / leaves as f64;
    }
    Ok(excess)
}

/// Scaled excess risk of every replicate, in replicate order.
pub fn simulate_replicates(cfg: &ShiftSimConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let cells = cfg.cell_values();
    let k = cfg.k_cells as f64;
    par::map_indexed(cfg.replicates, |r| {
        let s = seed::derive(cfg.seed, "shift-replicate", &[r.into()]);
        replicate_excess(cfg, &cells, s).map(|e| k * e)
    })
    .into_iter()
    .collect()
}

pub fn simulate_excess_risk(cfg: &ShiftSimConfig) -> Result<ExcessRiskEstimate> {
    let scaled = simulate_replicates(cfg)?;
    let n = scaled.len() as f64;
    let mean = scaled.iter().sum::<f64>() / n;
    let se = if scaled.len() > 1 {
        (scaled.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    let theory = theoretical_excess_mean(cfg)?;
    let gap = (mean - theory).abs();
    let relative_gap = if theory > 0.0 {
        gap / theory
    } else if gap == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(ExcessRiskEstimate {
        replicates: scaled.len(),
        empirical_mean: mean,
        standard_error: se,
        theory,
        relative_gap,
        shift_penalty: mean - sampling_term(cfg)?,
        within_3se: gap <= 3.0 * se,
    })
}

/// A named simulation in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub sim: ShiftSimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    pub scenarios: Vec<Scenario>,
    #[serde(default = "default_gap")]
    pub max_relative_gap: f64,
}

fn default_gap() -> f64 {
    0.1
}

impl Default for TheoryConfig {
    /// No shift with the target alone, then unit shift at source/target
    /// size ratios 1 and 9.
    fn default() -> Self {
        let mut own = ShiftSimConfig::pooled(2000, 10, 1000, &[], 0.0, 500);
        own.seed = 1;
        let mut equal = ShiftSimConfig::pooled(2000, 10, 1000, &[1000], 1.0, 500);
        equal.seed = 2;
        let mut large = ShiftSimConfig::pooled(2000, 10, 1000, &[9000], 1.0, 500);
        large.seed = 3;
        TheoryConfig {
            scenarios: vec![
                Scenario {
                    name: "no_shift".into(),
                    sim: own,
                },
                Scenario {
                    name: "shift_ratio_1".into(),
                    sim: equal,
                },
                Scenario {
                    name: "shift_ratio_9".into(),
                    sim: large,
                },
            ],
            max_relative_gap: default_gap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub name: String,
    pub config: ShiftSimConfig,
    pub estimate: ExcessRiskEstimate,
    pub pass: bool,
}

pub fn run_theory(cfg: &TheoryConfig) -> Result<Vec<ScenarioResult>> {
    if cfg.scenarios.is_empty() {
        return Err(Error::config("scenarios", "needs at least one scenario"));
    }
    cfg.scenarios
        .iter()
        .map(|s| {
            let estimate = simulate_excess_risk(&s.sim)?;
            Ok(ScenarioResult {
                name: s.name.clone(),
                config: s.sim.clone(),
                pass: estimate.passes(cfg.max_relative_gap),
                estimate,
            })
        })
        .collect()
}

pub fn sweep_csv(results: &[ScenarioResult]) -> String {
    let mut out = String::from(
        "name,k_cells,leaves,n_target,other_sizes,shift_variances,cluster,replicates,empirical_mean,standard_error,theory,relative_gap,shift_penalty,within_3se,pass\n",
    );
    let join = |v: Vec<String>| v.join(";");
    for r in results {
        let c = &r.config;
        let e = &r.estimate;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.name,
            c.k_cells,
            c.leaves,
            c.sources[0].n,
            join(c.sources[1..].iter().map(|s| s.n.to_string()).collect()),
            join(
                c.sources
                    .iter()
                    .map(|s| s.shift_variance.to_string())
                    .collect()
            ),
            join(c.cluster.iter().map(|m| m.to_string()).collect()),
            e.replicates,
            e.empirical_mean,
            e.standard_error,
            e.theory,
            e.relative_gap,
            e.shift_penalty,
            e.within_3se,
            r.pass
        ));
    }
    out
}
