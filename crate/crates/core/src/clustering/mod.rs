//! Fitted clustering models behind one interface.
//!
//! Models operate on encoded numeric vectors (see
//! [`Encoder`](crate::dataspace::Encoder)). Each model can assign unseen
//! points without refitting and carries per-cluster summaries (reference
//! point plus min/max member distance) for the centroid-distance score.

mod dbscan;
mod kmeans;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use dbscan::{dbscan_fit, dbscan_fit_with, DbscanModel};
pub use kmeans::{kmeans_fit, kmeans_fit_with, KMeansModel, KMeansParams};

/// Output of [`ClusterModel::assign`]. NOISE is never a valid target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    Cluster(usize),
    Noise,
}

impl Assignment {
    pub fn cluster(self) -> Option<usize> {
        match self {
            Assignment::Cluster(c) => Some(c),
            Assignment::Noise => None,
        }
    }
}

impl std::fmt::Display for Assignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Assignment::Cluster(c) => write!(f, "{c}"),
            Assignment::Noise => f.write_str("NOISE"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => crate::util::squared_euclidean(a, b).sqrt(),
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster_id: usize,
    pub centroid: Vec<f64>,
    /// Smallest member-to-centroid distance.
    pub min_dist: f64,
    /// Largest member-to-centroid distance.
    pub max_dist: f64,
    pub cardinality: usize,
}

pub trait ClusterModel: Send + Sync {
    /// Cluster of `x` (an encoded vector). Deterministic once fitted.
    fn assign(&self, x: &[f64]) -> Result<Assignment>;

    fn num_clusters(&self) -> usize;

    /// Summaries computed on the training data at fit time, one per cluster.
    fn summaries(&self) -> &[ClusterSummary];

    fn metric(&self) -> Metric;

    /// Dimension of the encoded space the model was fitted in.
    fn dim(&self) -> usize;

    /// Reference point of `cluster`, when the model has one of its own.
    /// Models without one (density-based) get the member mean instead.
    fn reference_point(&self, cluster: usize) -> Option<&[f64]>;

    fn summary(&self, cluster: usize) -> Option<&ClusterSummary> {
        self.summaries().iter().find(|s| s.cluster_id == cluster)
    }
}

/// Summaries plus the clusters that had to be skipped.
#[derive(Debug, Clone, Default)]
pub struct SummaryReport {
    pub summaries: Vec<ClusterSummary>,
    pub warnings: Vec<String>,
}

/// Per-cluster reference point and min/max member distance over `data`.
///
/// Membership is decided by [`ClusterModel::assign`]. Empty clusters are left
/// out with a warning.
pub fn cluster_summaries(model: &dyn ClusterModel, data: &[Vec<f64>]) -> Result<SummaryReport> {
    let k = model.num_clusters();
    let mut members: Vec<Vec<&[f64]>> = vec![Vec::new(); k];
    for row in data {
        if let Assignment::Cluster(c) = model.assign(row)? {
            members[c].push(row);
        }
    }
    Ok(summarize(model, &members))
}

pub(crate) fn summarize(model: &dyn ClusterModel, members: &[Vec<&[f64]>]) -> SummaryReport {
    let metric = model.metric();
    let mut report = SummaryReport::default();
    for (c, pts) in members.iter().enumerate() {
        if pts.is_empty() {
            let msg = format!("cluster {c} has no members; summary skipped");
            log::warn!("{msg}");
            report.warnings.push(msg);
            continue;
        }
        let centroid = match model.reference_point(c) {
            Some(p) => p.to_vec(),
            None => member_mean(pts),
        };
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for p in pts {
            let d = metric.distance(p, &centroid);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        report.summaries.push(ClusterSummary {
            cluster_id: c,
            centroid,
            min_dist: lo,
            max_dist: hi,
            cardinality: pts.len(),
        });
    }
    report
}

fn member_mean(pts: &[&[f64]]) -> Vec<f64> {
    let dim = pts[0].len();
    let mut mean = vec![0.0; dim];
    for p in pts {
        for (m, v) in mean.iter_mut().zip(p.iter()) {
            *m += v;
        }
    }
    let n = pts.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Serialisable union of the shipped adapters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum FittedModel {
    Kmeans(KMeansModel),
    Dbscan(DbscanModel),
}

impl FittedModel {
    fn inner(&self) -> &dyn ClusterModel {
        match self {
            FittedModel::Kmeans(m) => m,
            FittedModel::Dbscan(m) => m,
        }
    }

    /// Training-time labels, one per fitted row.
    pub fn labels(&self) -> &[Assignment] {
        match self {
            FittedModel::Kmeans(m) => &m.labels,
            FittedModel::Dbscan(m) => &m.labels,
        }
    }

    pub fn algorithm(&self) -> &'static str {
        match self {
            FittedModel::Kmeans(_) => "kmeans",
            FittedModel::Dbscan(_) => "dbscan",
        }
    }
}

impl ClusterModel for FittedModel {
    fn assign(&self, x: &[f64]) -> Result<Assignment> {
        self.inner().assign(x)
    }
    fn num_clusters(&self) -> usize {
        self.inner().num_clusters()
    }
    fn summaries(&self) -> &[ClusterSummary] {
        self.inner().summaries()
    }
    fn metric(&self) -> Metric {
        self.inner().metric()
    }
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn reference_point(&self, cluster: usize) -> Option<&[f64]> {
        self.inner().reference_point(cluster)
    }
}
