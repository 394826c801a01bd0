//! Bagged regression trees approximating the objective over the encoded
//! candidate space. The spread of per-tree predictions is the uncertainty
//! fed to expected improvement.

use rand::Rng;

use crate::error::{contract, Result};
use crate::util::{mix_seed, rng};

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    value: f64,
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            let n = &self.nodes[at];
            if n.feature == LEAF {
                return n.value;
            }
            at = if x[n.feature as usize] <= n.threshold {
                n.left as usize
            } else {
                n.right as usize
            };
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegressionForest {
    trees: Vec<Tree>,
    /// Bootstrap multiplicity of every training row, per tree.
    bags: Vec<Vec<u32>>,
    dim: usize,
}

/// Column-major copy of the training data plus each column's sort order.
struct Columns {
    cols: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl Columns {
    fn new(x: &[Vec<f64>], dim: usize) -> Self {
        let cols: Vec<Vec<f64>> = (0..dim).map(|f| x.iter().map(|r| r[f]).collect()).collect();
        let order = cols
            .iter()
            .map(|c| {
                let mut idx: Vec<u32> = (0..c.len() as u32).collect();
                idx.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { cols, order }
    }
}

struct Builder<'a> {
    data: &'a Columns,
    y: &'a [f64],
    weight: &'a [u32],
    /// Per feature: active sample ids, each node owning a contiguous range
    /// sorted by that feature.
    buf: Vec<Vec<u32>>,
    scratch: Vec<u32>,
    goes_left: Vec<bool>,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&mut self, value: f64) -> u32 {
        self.nodes.push(Node {
            feature: LEAF,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
        });
        (self.nodes.len() - 1) as u32
    }

    fn build(&mut self, start: usize, end: usize) -> u32 {
        let ids = &self.buf[0][start..end];
        let (mut w, mut s) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in ids {
            let (wi, yi) = (self.weight[i as usize] as f64, self.y[i as usize]);
            w += wi;
            s += wi * yi;
            lo = lo.min(yi);
            hi = hi.max(yi);
        }
        let mean = s / w;
        if w < 2.0 || lo == hi {
            return self.leaf(mean);
        }

        // maximise S_L²/W_L + S_R²/W_R, equivalent to minimising child SSE
        let parent = s * s / w;
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for (f, col) in self.data.cols.iter().enumerate() {
            let seg = &self.buf[f][start..end];
            let (mut wl, mut sl) = (0.0, 0.0);
            for k in 0..seg.len() - 1 {
                let i = seg[k] as usize;
                let wi = self.weight[i] as f64;
                wl += wi;
                sl += wi * self.y[i];
                let (v, next) = (col[i], col[seg[k + 1] as usize]);
                if v >= next {
                    continue;
                }
                let wr = w - wl;
                let sr = s - sl;
                let score = sl * sl / wl + sr * sr / wr;
                if score > parent + 1e-12 * parent.abs().max(1e-300)
                    && best.is_none_or(|(b, ..)| score > b)
                {
                    let mut t = 0.5 * (v + next);
                    if t >= next {
                        t = v;
                    }
                    best = Some((score, f, k, t));
                }
            }
        }
        let Some((_, feature, split_at, threshold)) = best else {
            return self.leaf(mean);
        };

        for (k, &i) in self.buf[feature][start..end].iter().enumerate() {
            self.goes_left[i as usize] = k <= split_at;
        }
        let mid = start + split_at + 1;
        for f in 0..self.buf.len() {
            self.scratch.clear();
            let seg = &mut self.buf[f][start..end];
            let mut l = 0;
            for k in 0..seg.len() {
                let i = seg[k];
                if self.goes_left[i as usize] {
                    seg[l] = i;
                    l += 1;
                } else {
                    self.scratch.push(i);
                }
            }
            seg[l..].copy_from_slice(&self.scratch);
        }

        let at = self.nodes.len();
        self.nodes.push(Node {
            feature: feature as u32,
            threshold,
            left: 0,
            right: 0,
            value: mean,
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[at].left = left;
        self.nodes[at].right = right;
        at as u32
    }
}

impl RegressionForest {
    /// Bootstrap-aggregated regression trees grown to purity.
    pub fn fit(x: &[Vec<f64>], y: &[f64], num_trees: usize, seed: u64) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(contract("surrogate needs at least one (x, y) observation"));
        }
        if num_trees == 0 {
            return Err(contract("surrogate needs at least one tree"));
        }
        let n = x.len();
        let dim = x[0].len();
        if x.iter().any(|r| r.len() != dim) {
            return Err(contract("observations have differing dimensions"));
        }
        let data = Columns::new(x, dim);

        let mut trees = Vec::with_capacity(num_trees);
        let mut bags = Vec::with_capacity(num_trees);
        for t in 0..num_trees {
            let mut r = rng(mix_seed(seed, t as u64));
            let mut weight = vec![0u32; n];
            for _ in 0..n {
                weight[r.random_range(0..n)] += 1;
            }
            let buf: Vec<Vec<u32>> = data
                .order
                .iter()
                .map(|o| o.iter().copied().filter(|&i| weight[i as usize] > 0).collect())
                .collect();
            let active = buf.first().map_or(0, Vec::len);
            let nodes = if dim == 0 {
                let mean = weight.iter().zip(y).map(|(w, v)| *w as f64 * v).sum::<f64>() / n as f64;
                vec![Node {
                    feature: LEAF,
                    threshold: 0.0,
                    left: 0,
                    right: 0,
                    value: mean,
                }]
            } else {
                let mut b = Builder {
                    data: &data,
                    y,
                    weight: &weight,
                    buf,
                    scratch: Vec::with_capacity(active),
                    goes_left: vec![false; n],
                    nodes: Vec::new(),
                };
                b.build(0, active);
                b.nodes
            };
            trees.push(Tree { nodes });
            bags.push(weight);
        }
        Ok(Self { trees, bags, dim })
    }

    /// Mean and population standard deviation of the per-tree predictions.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        debug_assert_eq!(x.len(), self.dim);
        let n = self.trees.len() as f64;
        let (mut s, mut s2) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for t in &self.trees {
            let v = t.predict(x);
            s += v;
            s2 += v * v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        // exact agreement must give exactly zero spread
        if lo == hi {
            return (lo, 0.0);
        }
        let mean = s / n;
        let var = (s2 / n - mean * mean).max(0.0);
        (mean, var.sqrt())
    }

    /// Out-of-bag prediction for every training row (`None` when the row
    /// was in every bootstrap sample).
    pub fn oob_predictions(&self, x: &[Vec<f64>]) -> Vec<Option<f64>> {
        x.iter()
            .enumerate()
            .map(|(i, row)| {
                let preds: Vec<f64> = self
                    .trees
                    .iter()
                    .zip(&self.bags)
                    .filter(|(_, bag)| bag.get(i).copied() == Some(0))
                    .map(|(t, _)| t.predict(row))
                    .collect();
                (!preds.is_empty()).then(|| preds.iter().sum::<f64>() / preds.len() as f64)
            })
            .collect()
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }
}
