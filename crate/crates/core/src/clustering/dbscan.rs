use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{summarize, Assignment, ClusterModel, ClusterSummary, Metric};
use crate::error::{contract, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbscanModel {
    pub eps: f64,
    pub min_pts: usize,
    pub metric: Metric,
    pub core_samples: Vec<Vec<f64>>,
    /// Cluster of each core sample, aligned with `core_samples`.
    pub core_labels: Vec<usize>,
    pub labels: Vec<Assignment>,
    pub n_clusters: usize,
    pub summaries: Vec<ClusterSummary>,
}

impl ClusterModel for DbscanModel {
    /// Cluster of the nearest core sample when it lies within `eps`.
    fn assign(&self, x: &[f64]) -> Result<Assignment> {
        if x.len() != self.dim() {
            return Err(contract(format!(
                "point has dimension {}, model expects {}",
                x.len(),
                self.dim()
            )));
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, core) in self.core_samples.iter().enumerate() {
            let d = self.metric.distance(core, x);
            if d <= self.eps && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        Ok(match best {
            Some((i, _)) => Assignment::Cluster(self.core_labels[i]),
            None => Assignment::Noise,
        })
    }

    fn num_clusters(&self) -> usize {
        self.n_clusters
    }

    fn summaries(&self) -> &[ClusterSummary] {
        &self.summaries
    }

    fn metric(&self) -> Metric {
        self.metric
    }

    fn dim(&self) -> usize {
        self.core_samples.first().map_or(0, Vec::len)
    }

    fn reference_point(&self, _cluster: usize) -> Option<&[f64]> {
        None
    }
}

pub fn dbscan_fit(data: &[Vec<f64>], eps: f64, min_pts: usize) -> Result<DbscanModel> {
    dbscan_fit_with(data, eps, min_pts, Metric::Euclidean)
}

/// Classical DBSCAN over the rows in their given order. Neighbourhoods
/// include the point itself.
pub fn dbscan_fit_with(data: &[Vec<f64>], eps: f64, min_pts: usize, metric: Metric) -> Result<DbscanModel> {
    if !(eps > 0.0) {
        return Err(contract("eps must be positive"));
    }
    if min_pts == 0 {
        return Err(contract("min_pts must be at least 1"));
    }
    let n = data.len();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| metric.distance(&data[i], &data[j]) <= eps).collect())
        .collect();
    let is_core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels = vec![Assignment::Noise; n];
    let mut visited = vec![false; n];
    let mut n_clusters = 0;
    for start in 0..n {
        if visited[start] || !is_core[start] {
            continue;
        }
        let cluster = n_clusters;
        n_clusters += 1;
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(p) = queue.pop_front() {
            labels[p] = Assignment::Cluster(cluster);
            if !is_core[p] {
                continue;
            }
            for &q in &neighbours[p] {
                if !visited[q] {
                    visited[q] = true;
                    queue.push_back(q);
                }
            }
        }
    }

    let mut model = DbscanModel {
        eps,
        min_pts,
        metric,
        core_samples: Vec::new(),
        core_labels: Vec::new(),
        labels,
        n_clusters,
        summaries: Vec::new(),
    };
    for i in (0..n).filter(|&i| is_core[i]) {
        model.core_samples.push(data[i].clone());
        model.core_labels.push(model.labels[i].cluster().expect("core points are clustered"));
    }
    let mut members: Vec<Vec<&[f64]>> = vec![Vec::new(); n_clusters];
    for (row, label) in data.iter().zip(&model.labels) {
        if let Assignment::Cluster(c) = label {
            members[*c].push(row);
        }
    }
    model.summaries = summarize(&model, &members).summaries;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, HashSet};

    use rand::seq::SliceRandom;

    use super::*;
    use crate::util::rng;

    /// Two 5x10 grids (spacing 1) whose origins are 100 apart.
    fn grid_blobs() -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for offset in [0.0, 100.0] {
            for i in 0..5 {
                for j in 0..10 {
                    pts.push(vec![offset + i as f64, j as f64]);
                }
            }
        }
        pts
    }

    #[test]
    fn huge_eps_yields_one_cluster() {
        let data = grid_blobs();
        let m = dbscan_fit(&data, 1e4, 1).unwrap();
        assert_eq!(m.n_clusters, 1);
        assert!(m.labels.iter().all(|l| *l == Assignment::Cluster(0)));
    }

    #[test]
    fn sparse_points_are_all_noise() {
        let data: Vec<Vec<f64>> = (0..10).map(|i| vec![10.0 * i as f64]).collect();
        let m = dbscan_fit(&data, 1.0, 2).unwrap();
        assert_eq!(m.n_clusters, 0);
        assert!(m.labels.iter().all(|l| *l == Assignment::Noise));
        assert_eq!(m.assign(&[0.0]).unwrap_or(Assignment::Noise), Assignment::Noise);
    }

    #[test]
    fn separated_blobs_give_two_clusters_without_noise() {
        let data = grid_blobs();
        let eps = 3.0;
        let m = dbscan_fit(&data, eps, 5).unwrap();
        assert_eq!(m.n_clusters, 2);
        assert!(m.labels.iter().all(|l| *l != Assignment::Noise));
        // brute-force check of the core condition
        for core in &m.core_samples {
            let count = data.iter().filter(|p| Metric::Euclidean.distance(p, core) <= eps).count();
            assert!(count >= 5);
        }
        // no point links the blobs
        assert!(m.labels[..50].iter().all(|l| *l == m.labels[0]));
        assert!(m.labels[50..].iter().all(|l| *l == m.labels[50]));
        assert_ne!(m.labels[0], m.labels[50]);
    }

    #[test]
    fn assign_far_point_is_noise() {
        let m = dbscan_fit(&grid_blobs(), 3.0, 5).unwrap();
        assert_eq!(m.assign(&[50.0, 50.0]).unwrap(), Assignment::Noise);
        assert_eq!(m.assign(&[101.0, 3.0]).unwrap(), m.labels[60]);
    }

    #[test]
    fn labels_are_permutation_invariant_up_to_relabelling() {
        let data = grid_blobs();
        let base = dbscan_fit(&data, 3.0, 5).unwrap();
        let mut order: Vec<usize> = (0..data.len()).collect();
        for seed in 0..5 {
            order.shuffle(&mut rng(seed));
            let shuffled: Vec<Vec<f64>> = order.iter().map(|&i| data[i].clone()).collect();
            let m = dbscan_fit(&shuffled, 3.0, 5).unwrap();
            let mut mapping = BTreeMap::new();
            for (pos, &orig) in order.iter().enumerate() {
                let prev = mapping.insert(base.labels[orig], m.labels[pos]);
                assert!(prev.is_none() || prev == Some(m.labels[pos]));
            }
            let images: HashSet<_> = mapping.values().collect();
            assert_eq!(images.len(), mapping.len());
        }
    }
}
