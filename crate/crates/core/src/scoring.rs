//! Candidate scoring: `F = S_f · S_x · S_y`.
//!
//! `S_f` and `S_x` compare a candidate with the original instance in feature
//! space. `S_y` measures closeness to the target cluster in the model's output
//! space and comes in three flavours:
//!
//! * [`HardScore`]: 1 if the model assigns the candidate to the target, else 0;
//! * [`CentroidDistanceScore`]: `1 - (d(x, C_t) - min_t) / (max_t - min_t)`,
//!   clipped to `[0, 1]`;
//! * [`MembershipScore`]: the target component of a membership-probability
//!   vector, e.g. from a self-trained classifier.

use serde::{Deserialize, Serialize};

use crate::clustering::{Assignment, ClusterModel, ClusterSummary, Metric};
use crate::dataspace::{gower_distance, FeatureSchema, Instance};
use crate::error::{contract, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub s_f: f64,
    pub s_x: f64,
    pub s_y: f64,
    pub total: f64,
}

impl ScoreBreakdown {
    pub fn new(s_f: f64, s_x: f64, s_y: f64) -> Self {
        Self {
            s_f,
            s_x,
            s_y,
            total: s_f * s_x * s_y,
        }
    }
}

/// Share of features left exactly as in `origin`.
pub fn score_f(candidate: &Instance, origin: &Instance) -> f64 {
    if origin.is_empty() {
        return 1.0;
    }
    let equal = candidate
        .values
        .iter()
        .zip(&origin.values)
        .filter(|(a, b)| a.same_as(b))
        .count();
    equal as f64 / origin.len() as f64
}

/// `1 - d_Gower(candidate, origin)`.
pub fn score_x(candidate: &Instance, origin: &Instance, schema: &FeatureSchema) -> Result<f64> {
    Ok(1.0 - gower_distance(candidate, origin, schema)?)
}

pub fn sy_hard(encoded: &[f64], target: usize, model: &dyn ClusterModel) -> Result<f64> {
    Ok(if model.assign(encoded)? == Assignment::Cluster(target) {
        1.0
    } else {
        0.0
    })
}

/// Scaled distance to the target cluster's reference point, clipped to
/// `[0, 1]`. A degenerate summary (`max == min`) is a step at `min`.
pub fn sy_centroid_distance(encoded: &[f64], summary: &ClusterSummary, metric: Metric) -> f64 {
    let d = metric.distance(encoded, &summary.centroid);
    let span = summary.max_dist - summary.min_dist;
    if span <= 0.0 {
        return if d <= summary.min_dist { 1.0 } else { 0.0 };
    }
    (1.0 - (d - summary.min_dist) / span).clamp(0.0, 1.0)
}

/// Target component of a probability vector indexed like `classes`.
/// Clusters absent from `classes` score 0.
pub fn sy_membership(probabilities: &[f64], classes: &[usize], target: usize) -> Result<f64> {
    if probabilities.len() != classes.len() {
        return Err(contract("probability vector and class list differ in length"));
    }
    let sum: f64 = probabilities.iter().sum();
    if (sum - 1.0).abs() > 1e-6 || probabilities.iter().any(|p| *p < 0.0) {
        return Err(contract(format!(
            "membership vector is not a distribution (sum = {sum})"
        )));
    }
    Ok(classes
        .iter()
        .position(|&c| c == target)
        .map_or(0.0, |i| probabilities[i]))
}

/// Anything that can turn an encoded point into cluster-membership
/// probabilities.
pub trait MembershipProvider: Send + Sync {
    /// Cluster ids that index the probability vector.
    fn classes(&self) -> &[usize];

    fn probabilities(&self, encoded: &[f64]) -> Result<Vec<f64>>;
}

/// Output-space score `S_y` of an encoded candidate for a target cluster.
pub trait SyStrategy: Send + Sync {
    fn score(&self, encoded: &[f64], target: usize) -> Result<f64>;

    fn name(&self) -> &'static str;
}

pub struct HardScore<'a> {
    pub model: &'a dyn ClusterModel,
}

impl SyStrategy for HardScore<'_> {
    fn score(&self, encoded: &[f64], target: usize) -> Result<f64> {
        sy_hard(encoded, target, self.model)
    }

    fn name(&self) -> &'static str {
        "hard"
    }
}

pub struct CentroidDistanceScore<'a> {
    pub summaries: &'a [ClusterSummary],
    pub metric: Metric,
}

impl<'a> CentroidDistanceScore<'a> {
    pub fn for_model(model: &'a dyn ClusterModel) -> Self {
        Self {
            summaries: model.summaries(),
            metric: model.metric(),
        }
    }
}

impl SyStrategy for CentroidDistanceScore<'_> {
    fn score(&self, encoded: &[f64], target: usize) -> Result<f64> {
        let summary = self
            .summaries
            .iter()
            .find(|s| s.cluster_id == target)
            .ok_or_else(|| contract(format!("no summary for cluster {target}")))?;
        Ok(sy_centroid_distance(encoded, summary, self.metric))
    }

    fn name(&self) -> &'static str {
        "distance"
    }
}

pub struct MembershipScore<'a> {
    pub provider: &'a dyn MembershipProvider,
}

impl SyStrategy for MembershipScore<'_> {
    fn score(&self, encoded: &[f64], target: usize) -> Result<f64> {
        let probs = self.provider.probabilities(encoded)?;
        sy_membership(&probs, self.provider.classes(), target)
    }

    fn name(&self) -> &'static str {
        "agnostic"
    }
}

/// Full breakdown of a candidate. `encoded` is the candidate in the model's
/// space, used only by the `S_y` strategy.
pub fn total_score(
    candidate: &Instance,
    origin: &Instance,
    schema: &FeatureSchema,
    encoded: &[f64],
    target: usize,
    sy: &dyn SyStrategy,
) -> Result<ScoreBreakdown> {
    let s_f = score_f(candidate, origin);
    let s_x = score_x(candidate, origin, schema)?;
    let s_y = sy.score(encoded, target)?;
    Ok(ScoreBreakdown::new(s_f, s_x, s_y))
}
