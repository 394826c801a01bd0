//! Self-training over an extremely randomised trees classifier.
//!
//! The classifier is seeded with the labelled representatives of each
//! cluster, then repeatedly pseudo-labels unlabelled training points it is
//! confident about and refits. Its class-vote fractions serve as
//! cluster-membership probabilities for the model-agnostic `S_y`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::scoring::MembershipProvider;
use crate::util::{mix_seed, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
    },
}

/// One randomised tree. `class` in leaves indexes the ensemble's class list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedTree {
    nodes: Vec<Node>,
}

impl RandomizedTree {
    fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 1,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    max_features: usize,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    fn majority(counts: &[usize]) -> usize {
        counts
            .iter()
            .enumerate()
            .fold(0, |best, (k, &v)| if v > counts[best] { k } else { best })
    }

    fn gini(counts: &[usize], n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let n = n as f64;
        1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
    }

    fn build(&mut self, idx: Vec<usize>, rng: &mut impl Rng) -> usize {
        let counts = self.counts(&idx);
        let at = self.nodes.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || idx.len() <= 2 {
            self.nodes.push(Node::Leaf {
                class: Self::majority(&counts),
            });
            return at;
        }

        let dim = self.x[idx[0]].len();
        let mut features: Vec<usize> = (0..dim).collect();
        features.shuffle(rng);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut tried = 0;
        for &f in &features {
            if tried == self.max_features {
                break;
            }
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                (lo.min(self.x[i][f]), hi.max(self.x[i][f]))
            });
            if !(hi > lo) {
                continue;
            }
            tried += 1;
            let mut t = rng.random_range(lo..hi);
            if t >= hi {
                t = lo;
            }
            let mut left = vec![0; self.n_classes];
            let mut n_left = 0;
            for &i in &idx {
                if self.x[i][f] <= t {
                    left[self.y[i]] += 1;
                    n_left += 1;
                }
            }
            let right: Vec<usize> = counts.iter().zip(&left).map(|(a, b)| a - b).collect();
            let n_right = idx.len() - n_left;
            let impurity = (n_left as f64 * Self::gini(&left, n_left)
                + n_right as f64 * Self::gini(&right, n_right))
                / idx.len() as f64;
            if best.is_none_or(|(b, _, _)| impurity < b) {
                best = Some((impurity, f, t));
            }
        }

        let Some((_, feature, threshold)) = best else {
            // every feature is constant here
            self.nodes.push(Node::Leaf {
                class: Self::majority(&counts),
            });
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x[i][feature] <= threshold);
        self.nodes.push(Node::Leaf { class: 0 });
        let left = self.build(l, rng);
        let right = self.build(r, rng);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

/// Ensemble of randomised trees; probabilities are vote fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleClassifier {
    pub classes: Vec<usize>,
    pub num_trees: usize,
    pub seed: u64,
    dim: usize,
    trees: Vec<RandomizedTree>,
}

impl TreeEnsembleClassifier {
    /// Fits every tree on all labelled points (no bootstrap). `classes` is
    /// the full label space; labels in `y` must belong to it.
    pub fn fit(x: &[Vec<f64>], y: &[usize], classes: &[usize], num_trees: usize, seed: u64) -> Result<Self> {
        if x.is_empty() {
            return Err(contract("cannot fit a classifier on no labelled points"));
        }
        if x.len() != y.len() {
            return Err(contract("features and labels differ in length"));
        }
        if num_trees == 0 {
            return Err(contract("num_trees must be at least 1"));
        }
        let dim = x[0].len();
        if x.iter().any(|r| r.len() != dim) {
            return Err(contract("rows have differing dimensions"));
        }
        let mut classes = classes.to_vec();
        classes.sort_unstable();
        classes.dedup();
        let y_idx: Vec<usize> = y
            .iter()
            .map(|c| {
                classes
                    .binary_search(c)
                    .map_err(|_| contract(format!("label {c} is not a known class")))
            })
            .collect::<Result<_>>()?;

        let max_features = ((dim as f64).sqrt().ceil() as usize).max(1);
        let trees = (0..num_trees)
            .map(|t| {
                let mut r = rng(mix_seed(seed, t as u64));
                let mut b = TreeBuilder {
                    x,
                    y: &y_idx,
                    n_classes: classes.len(),
                    max_features,
                    nodes: Vec::new(),
                };
                b.build((0..x.len()).collect(), &mut r);
                RandomizedTree { nodes: b.nodes }
            })
            .collect();
        Ok(Self {
            classes,
            num_trees,
            seed,
            dim,
            trees,
        })
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(contract(format!(
                "point has dimension {}, classifier expects {}",
                x.len(),
                self.dim
            )));
        }
        let mut votes = vec![0usize; self.classes.len()];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        let n = self.trees.len() as f64;
        Ok(votes.into_iter().map(|v| v as f64 / n).collect())
    }

    /// Most voted class; ties go to the lowest cluster id.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let p = self.predict_proba(x)?;
        Ok(self.classes[argmax(&p)])
    }

    pub fn trees(&self) -> &[RandomizedTree] {
        &self.trees
    }
}

fn argmax(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .fold(0, |best, (k, v)| if *v > p[best] { k } else { best })
}

impl MembershipProvider for TreeEnsembleClassifier {
    fn classes(&self) -> &[usize] {
        &self.classes
    }

    fn probabilities(&self, encoded: &[f64]) -> Result<Vec<f64>> {
        self.predict_proba(encoded)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfTrainingConfig {
    /// Minimum top-class probability for a pseudo-label.
    pub threshold: f64,
    pub max_rounds: usize,
    pub num_trees: usize,
    pub seed: u64,
}

impl Default for SelfTrainingConfig {
    fn default() -> Self {
        Self {
            threshold: 0.75,
            max_rounds: 10,
            num_trees: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTrainingModel {
    pub base: TreeEnsembleClassifier,
    pub threshold: f64,
    pub max_rounds: usize,
    /// Number of new pseudo-labels per round.
    pub pseudo_label_log: Vec<usize>,
    /// Final pseudo-label of each unlabelled input point, if any.
    pub pseudo_labels: Vec<Option<usize>>,
}

impl SelfTrainingModel {
    pub fn membership_probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.base.predict_proba(x)
    }
}

impl MembershipProvider for SelfTrainingModel {
    fn classes(&self) -> &[usize] {
        &self.base.classes
    }

    fn probabilities(&self, encoded: &[f64]) -> Result<Vec<f64>> {
        self.membership_probabilities(encoded)
    }
}

/// Seeds `(x, y)` plus unlabelled rows; `classes` is the full label space.
pub fn self_train(
    labeled_x: &[Vec<f64>],
    labeled_y: &[usize],
    unlabeled: &[Vec<f64>],
    classes: &[usize],
    config: &SelfTrainingConfig,
) -> Result<SelfTrainingModel> {
    if !(config.threshold > 0.5 && config.threshold <= 1.0) {
        return Err(contract(format!(
            "self-training threshold must lie in (0.5, 1], got {}",
            config.threshold
        )));
    }
    let mut pool_x: Vec<Vec<f64>> = labeled_x.to_vec();
    let mut pool_y: Vec<usize> = labeled_y.to_vec();
    let mut pseudo: Vec<Option<usize>> = vec![None; unlabeled.len()];
    let mut log_counts = Vec::new();

    let mut base = TreeEnsembleClassifier::fit(&pool_x, &pool_y, classes, config.num_trees, config.seed)?;
    let mut stale = false;
    for _ in 0..config.max_rounds {
        if stale {
            base = TreeEnsembleClassifier::fit(&pool_x, &pool_y, classes, config.num_trees, config.seed)?;
            stale = false;
        }
        let mut added = 0;
        for (i, row) in unlabeled.iter().enumerate() {
            if pseudo[i].is_some() {
                continue;
            }
            let p = base.predict_proba(row)?;
            let k = argmax(&p);
            if p[k] >= config.threshold {
                pseudo[i] = Some(base.classes[k]);
                pool_x.push(row.clone());
                pool_y.push(base.classes[k]);
                added += 1;
            }
        }
        log_counts.push(added);
        if added == 0 {
            break;
        }
        stale = true;
    }
    if stale {
        base = TreeEnsembleClassifier::fit(&pool_x, &pool_y, classes, config.num_trees, config.seed)?;
    }

    Ok(SelfTrainingModel {
        base,
        threshold: config.threshold,
        max_rounds: config.max_rounds,
        pseudo_label_log: log_counts,
        pseudo_labels: pseudo,
    })
}

#[cfg(test)]
mod tests {
    use rand_distr::StandardNormal;

    use super::*;

    fn blobs(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut r = rng(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (c, center) in [[0.0, 0.0], [8.0, 8.0]].iter().enumerate() {
            for _ in 0..50 {
                let dx: f64 = r.sample(StandardNormal);
                let dy: f64 = r.sample(StandardNormal);
                x.push(vec![center[0] + dx, center[1] + dy]);
                y.push(c);
            }
        }
        (x, y)
    }

    #[test]
    fn single_class_is_one_hot_everywhere() {
        let x = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, -1.0]];
        let m = TreeEnsembleClassifier::fit(&x, &[3, 3, 3], &[1, 3], 20, 0).unwrap();
        assert_eq!(m.predict_proba(&[100.0, -7.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn separable_blobs_are_fit_exactly() {
        let (x, y) = blobs(1);
        let m = TreeEnsembleClassifier::fit(&x, &y, &[0, 1], 100, 7).unwrap();
        for (p, c) in x.iter().zip(&y) {
            assert_eq!(m.predict(p).unwrap(), *c);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (x, y) = blobs(2);
        let m = TreeEnsembleClassifier::fit(&x, &y, &[0, 1, 2], 50, 3).unwrap();
        let mut r = rng(5);
        for _ in 0..100 {
            let q = vec![r.random_range(-5.0..13.0), r.random_range(-5.0..13.0)];
            let p = m.predict_proba(&q).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|v| *v >= 0.0));
            assert_eq!(p[2], 0.0);
        }
        assert!(m.predict_proba(&[1.0]).is_err());
    }

    #[test]
    fn same_seed_same_trees() {
        let (x, y) = blobs(3);
        let a = TreeEnsembleClassifier::fit(&x, &y, &[0, 1], 30, 11).unwrap();
        let b = TreeEnsembleClassifier::fit(&x, &y, &[0, 1], 30, 11).unwrap();
        assert_eq!(a, b);
        let c = TreeEnsembleClassifier::fit(&x, &y, &[0, 1], 30, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(TreeEnsembleClassifier::fit(&[], &[], &[0], 10, 0).is_err());
    }

    #[test]
    fn no_unlabeled_points_equals_plain_fit() {
        let (x, y) = blobs(4);
        let cfg = SelfTrainingConfig {
            num_trees: 25,
            seed: 9,
            ..SelfTrainingConfig::default()
        };
        let st = self_train(&x, &y, &[], &[0, 1], &cfg).unwrap();
        let plain = TreeEnsembleClassifier::fit(&x, &y, &[0, 1], 25, 9).unwrap();
        assert_eq!(st.base, plain);
    }

    #[test]
    fn unanimity_threshold_without_unanimous_votes_adds_nothing() {
        // alternating labels on a line: random thresholds disagree at 1.5
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![0, 1, 0, 1];
        let cfg = SelfTrainingConfig {
            threshold: 1.0,
            num_trees: 50,
            ..SelfTrainingConfig::default()
        };
        let base = TreeEnsembleClassifier::fit(&x, &y, &[0, 1], 50, cfg.seed).unwrap();
        assert!(base.predict_proba(&[1.5]).unwrap().iter().all(|p| *p < 1.0));
        let st = self_train(&x, &y, &[vec![1.5]], &[0, 1], &cfg).unwrap();
        assert_eq!(st.pseudo_label_log, vec![0]);
        assert_eq!(st.pseudo_labels, vec![None]);
        assert_eq!(st.base, base);
    }

    #[test]
    fn self_training_labels_blobs_from_twenty_percent_seeds() {
        let (x, y) = blobs(6);
        let seeds: Vec<usize> = (0..100).filter(|i| i % 5 == 0).collect();
        let rest: Vec<usize> = (0..100).filter(|i| i % 5 != 0).collect();
        let lx: Vec<Vec<f64>> = seeds.iter().map(|&i| x[i].clone()).collect();
        let ly: Vec<usize> = seeds.iter().map(|&i| y[i]).collect();
        let ux: Vec<Vec<f64>> = rest.iter().map(|&i| x[i].clone()).collect();
        let st = self_train(&lx, &ly, &ux, &[0, 1], &SelfTrainingConfig::default()).unwrap();
        for (k, &i) in rest.iter().enumerate() {
            assert_eq!(st.pseudo_labels[k], Some(y[i]));
        }
        for (p, c) in lx.iter().zip(&ly) {
            let probs = st.membership_probabilities(p).unwrap();
            assert!(probs[*c] >= 0.9);
        }
    }
}
