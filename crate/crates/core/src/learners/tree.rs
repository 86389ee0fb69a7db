//! Weighted CART regression tree.
//!
//! Splits maximize the weighted reduction in squared error. Candidate
//! thresholds are midpoints between consecutive distinct sorted values; ties
//! keep the lower feature index and then the lower threshold. Rows with
//! `x[feature] <= threshold` go left.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LearnerSpec;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

struct Builder<'a, R> {
    x: &'a Matrix,
    y: &'a [f64],
    w: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    /// Features tried per split; `None` means all of them.
    mtry: Option<usize>,
    rng: Option<&'a mut R>,
    nodes: Vec<Node>,
    scratch: Vec<(f64, f64, f64)>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn leaf_value(&self, idx: &[usize]) -> (f64, f64, f64) {
        let mut sw = 0.0;
        let mut swy = 0.0;
        for &i in idx {
            sw += self.w[i];
            swy += self.w[i] * self.y[i];
        }
        let mean = swy / sw;
        let sse: f64 = idx
            .iter()
            .map(|&i| self.w[i] * (self.y[i] - mean) * (self.y[i] - mean))
            .sum();
        (mean, sw, sse)
    }

    fn features(&mut self) -> Vec<usize> {
        let d = self.x.cols();
        match (self.mtry, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize], total_w: f64, total_wy: f64) -> Option<BestSplit> {
        let n = idx.len();
        let parent = total_wy * total_wy / total_w;
        let mut best: Option<BestSplit> = None;
        for f in self.features() {
            self.scratch.clear();
            self.scratch.extend(
                idx.iter()
                    .map(|&i| (self.x.get(i, f), self.w[i] * self.y[i], self.w[i])),
            );
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut lw = 0.0;
            let mut lwy = 0.0;
            for k in 0..n - 1 {
                let (v, wy, w) = self.scratch[k];
                lw += w;
                lwy += wy;
                let next = self.scratch[k + 1].0;
                let left_n = k + 1;
                if v == next || left_n < self.min_leaf || n - left_n < self.min_leaf {
                    continue;
                }
                let rw = total_w - lw;
                if lw <= 0.0 || rw <= 0.0 {
                    continue;
                }
                let rwy = total_wy - lwy;
                let gain = lwy * lwy / lw + rwy * rwy / rw - parent;
                if best.as_ref().map_or(true, |b| gain > b.gain) {
                    let mut threshold = 0.5 * (v + next);
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(BestSplit {
                        gain,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let (mean, sw, sse) = self.leaf_value(idx);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: mean });
        if depth >= self.max_depth || idx.len() < 2 * self.min_leaf || sse <= 0.0 {
            return at;
        }
        let Some(split) = self.best_split(idx, sw, mean * sw) else {
            return at;
        };
        // Reject gains that are rounding noise relative to the node's error.
        if !(split.gain > 1e-12 * sse) {
            return at;
        }
        let mut cut = 0;
        for k in 0..idx.len() {
            if self.x.get(idx[k], split.feature) <= split.threshold {
                idx.swap(k, cut);
                cut += 1;
            }
        }
        if cut == 0 || cut == idx.len() {
            return at;
        }
        let (l, r) = idx.split_at_mut(cut);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

/// Grows a tree on the rows in `active` (all with positive weight). With
/// `rng` set, each split considers a random subset of `mtry` features.
pub(super) fn fit_with<R: Rng>(
    x: &Matrix,
    y: &[f64],
    w: &[f64],
    active: &[usize],
    spec: &LearnerSpec,
    mtry: Option<usize>,
    rng: Option<&mut R>,
) -> Tree {
    let mut builder = Builder {
        x,
        y,
        w,
        max_depth: spec.max_depth,
        min_leaf: spec.min_leaf,
        mtry,
        rng,
        nodes: Vec::new(),
        scratch: Vec::with_capacity(active.len()),
    };
    let mut idx = active.to_vec();
    builder.build(&mut idx, 0);
    Tree {
        nodes: builder.nodes,
    }
}

pub(super) fn fit(x: &Matrix, y: &[f64], w: &[f64], active: &[usize], spec: &LearnerSpec) -> Tree {
    fit_with::<rand_chacha::ChaCha8Rng>(x, y, w, active, spec, None, None)
}
