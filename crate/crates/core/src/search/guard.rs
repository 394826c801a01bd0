//! Isolation-forest outlier guard fitted on the encoded training data.
//! Candidates whose anomaly score exceeds the calibrated threshold are
//! considered out of distribution and never returned as counterfactuals.
//!
//! Isolation scores saturate outside the data hull (a remote point looks no
//! more anomalous than the most extreme training point along the same
//! direction), so the guard also rejects points outside the training
//! bounding box.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::util::{mix_seed, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum INode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    External {
        size: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ITree {
    nodes: Vec<INode>,
}

impl ITree {
    fn grow(data: &[Vec<f64>], idx: Vec<usize>, depth: usize, limit: usize, nodes: &mut Vec<INode>, r: &mut impl Rng) -> usize {
        let at = nodes.len();
        if idx.len() <= 1 || depth >= limit {
            nodes.push(INode::External { size: idx.len() });
            return at;
        }
        let dim = data[idx[0]].len();
        // features with spread in this node
        let spread: Vec<(usize, f64, f64)> = (0..dim)
            .filter_map(|f| {
                let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(data[i][f]), hi.max(data[i][f]))
                });
                (hi > lo).then_some((f, lo, hi))
            })
            .collect();
        if spread.is_empty() {
            nodes.push(INode::External { size: idx.len() });
            return at;
        }
        let (feature, lo, hi) = spread[r.random_range(0..spread.len())];
        let threshold = r.random_range(lo..hi);
        let (l, rt): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| data[i][feature] < threshold);
        nodes.push(INode::External { size: 0 });
        let left = Self::grow(data, l, depth + 1, limit, nodes, r);
        let right = Self::grow(data, rt, depth + 1, limit, nodes, r);
        nodes[at] = INode::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }

    fn path_length(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        let mut depth = 0.0;
        loop {
            match &self.nodes[at] {
                INode::External { size } => return depth + average_path(*size),
                INode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] < *threshold { *left } else { *right };
                    depth += 1.0;
                }
            }
        }
    }
}

/// Average unsuccessful-search path length in a BST of `n` nodes.
fn average_path(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * ((n - 1.0).ln() + 0.577_215_664_901_532_9) - 2.0 * (n - 1.0) / n
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierGuard {
    trees: Vec<ITree>,
    sample_size: usize,
    dim: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Expected share of training points allowed to fail the guard.
    pub contamination: f64,
    /// Scores above this fail.
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuardParams {
    pub num_trees: usize,
    pub max_samples: usize,
    pub contamination: f64,
    pub seed: u64,
}

impl Default for GuardParams {
    fn default() -> Self {
        Self {
            num_trees: 100,
            max_samples: 256,
            contamination: 0.05,
            seed: 0,
        }
    }
}

impl OutlierGuard {
    pub fn fit(data: &[Vec<f64>], params: &GuardParams) -> Result<Self> {
        if data.is_empty() {
            return Err(contract("outlier guard needs training data"));
        }
        if !(0.0..1.0).contains(&params.contamination) {
            return Err(contract("contamination must lie in [0, 1)"));
        }
        let dim = data[0].len();
        let psi = params.max_samples.clamp(1, data.len());
        let limit = (psi as f64).log2().ceil().max(1.0) as usize;
        let trees = (0..params.num_trees.max(1))
            .map(|t| {
                let mut r = rng(mix_seed(params.seed, t as u64));
                let idx = sample_indices(&mut r, data.len(), psi).into_vec();
                let mut nodes = Vec::new();
                ITree::grow(data, idx, 0, limit, &mut nodes, &mut r);
                ITree { nodes }
            })
            .collect();
        let mut lower = vec![f64::INFINITY; dim];
        let mut upper = vec![f64::NEG_INFINITY; dim];
        for row in data {
            for (f, v) in row.iter().enumerate() {
                lower[f] = lower[f].min(*v);
                upper[f] = upper[f].max(*v);
            }
        }
        let mut guard = Self {
            trees,
            sample_size: psi,
            dim,
            lower,
            upper,
            contamination: params.contamination,
            threshold: f64::INFINITY,
        };
        let mut scores: Vec<f64> = data.iter().map(|x| guard.score(x)).collect();
        scores.sort_by(f64::total_cmp);
        let keep = ((1.0 - params.contamination) * data.len() as f64).ceil() as usize;
        guard.threshold = scores[keep.clamp(1, data.len()) - 1];
        Ok(guard)
    }

    /// Anomaly score `2^(-E[h(x)] / c(psi))` in `(0, 1]`; higher is more anomalous.
    pub fn score(&self, x: &[f64]) -> f64 {
        let mean = self.trees.iter().map(|t| t.path_length(x)).sum::<f64>() / self.trees.len() as f64;
        let c = average_path(self.sample_size).max(f64::MIN_POSITIVE);
        2f64.powf(-mean / c)
    }

    pub fn passes(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim {
            return Err(contract("point dimension does not match the guard"));
        }
        let inside = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| {
                let slack = 1e-9 * (hi - lo).abs().max(1.0);
                *v >= lo - slack && *v <= hi + slack
            });
        Ok(inside && self.score(x) <= self.threshold)
    }
}
