use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{summarize, Assignment, ClusterModel, ClusterSummary, Metric};
use crate::error::{contract, Result};
use crate::util::{mix_seed, rng, squared_euclidean};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    /// Independent k-means++ restarts; the lowest-inertia one is kept.
    pub n_init: usize,
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid shift.
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            n_init: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub seed: u64,
    pub inertia: f64,
    pub params: KMeansParams,
    /// Training-point labels (nearest centroid).
    pub labels: Vec<Assignment>,
    pub summaries: Vec<ClusterSummary>,
}

impl KMeansModel {
    /// Index of the nearest centroid; ties go to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> usize {
        nearest(&self.centroids, x).0
    }
}

impl ClusterModel for KMeansModel {
    fn assign(&self, x: &[f64]) -> Result<Assignment> {
        if x.len() != self.dim() {
            return Err(contract(format!(
                "point has dimension {}, model expects {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(Assignment::Cluster(self.nearest(x)))
    }

    fn num_clusters(&self) -> usize {
        self.k
    }

    fn summaries(&self) -> &[ClusterSummary] {
        &self.summaries
    }

    fn metric(&self) -> Metric {
        Metric::Euclidean
    }

    fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    fn reference_point(&self, cluster: usize) -> Option<&[f64]> {
        self.centroids.get(cluster).map(Vec::as_slice)
    }
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_euclidean(c, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// k-means++ with the default [`KMeansParams`].
pub fn kmeans_fit(data: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansModel> {
    kmeans_fit_with(data, k, seed, KMeansParams::default())
}

pub fn kmeans_fit_with(
    data: &[Vec<f64>],
    k: usize,
    seed: u64,
    params: KMeansParams,
) -> Result<KMeansModel> {
    if k == 0 {
        return Err(contract("k must be at least 1"));
    }
    if k > data.len() {
        return Err(contract(format!("k = {k} exceeds the {} rows", data.len())));
    }
    let dim = data[0].len();
    if data.iter().any(|r| r.len() != dim) {
        return Err(contract("rows have differing dimensions"));
    }

    let mut best: Option<(Vec<Vec<f64>>, f64)> = None;
    for init in 0..params.n_init.max(1) {
        let mut rng = rng(mix_seed(seed, init as u64));
        let start = plus_plus_init(data, k, &mut rng);
        let run = lloyd(data, start, params.max_iter, params.tol);
        if best.as_ref().is_none_or(|(_, inertia)| run.inertia < *inertia) {
            best = Some((run.centroids, run.inertia));
        }
    }
    let (centroids, inertia) = best.expect("at least one initialisation");

    let mut model = KMeansModel {
        k,
        centroids,
        seed,
        inertia,
        params,
        labels: Vec::new(),
        summaries: Vec::new(),
    };
    let mut members: Vec<Vec<&[f64]>> = vec![Vec::new(); k];
    for row in data {
        let c = model.nearest(row);
        model.labels.push(Assignment::Cluster(c));
        members[c].push(row);
    }
    model.summaries = summarize(&model, &members).summaries;
    Ok(model)
}

/// D²-weighted seeding: first centroid uniform, each next one drawn with
/// probability proportional to the squared distance to the nearest chosen
/// centroid.
fn plus_plus_init(data: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![data[rng.random_range(0..data.len())].clone()];
    let mut d2: Vec<f64> = data.iter().map(|p| squared_euclidean(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // every point coincides with a centroid already
            Err(_) => rng.random_range(0..data.len()),
        };
        centroids.push(data[next].clone());
        let c = centroids.last().unwrap();
        for (d, p) in d2.iter_mut().zip(data) {
            *d = d.min(squared_euclidean(p, c));
        }
    }
    centroids
}

pub(crate) struct LloydRun {
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each assignment step.
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
}

pub(crate) fn lloyd(data: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize, tol: f64) -> LloydRun {
    let k = centroids.len();
    let dim = data[0].len();
    let mut labels = vec![0usize; data.len()];
    let mut trace = Vec::new();

    for _ in 0..max_iter {
        let mut inertia = 0.0;
        for (l, p) in labels.iter_mut().zip(data) {
            let (c, d) = nearest(&centroids, p);
            *l = c;
            inertia += d;
        }
        trace.push(inertia);

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&l, p) in labels.iter().zip(data) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                // empty cluster keeps its centroid
                continue;
            }
            let updated: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(squared_euclidean(&updated, &centroids[c]).sqrt());
            centroids[c] = updated;
        }
        if shift < tol {
            break;
        }
    }

    let inertia = data.iter().map(|p| nearest(&centroids, p).1).sum();
    trace.push(inertia);
    LloydRun {
        centroids,
        inertia,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng;
    use rand_distr::StandardNormal;

    use super::*;

    fn blobs(centers: &[[f64; 2]], per: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rng(seed);
        let mut out = Vec::new();
        for c in centers {
            for _ in 0..per {
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                out.push(vec![c[0] + spread * dx, c[1] + spread * dy]);
            }
        }
        out
    }

    #[test]
    fn k1_centroid_is_column_mean() {
        let data = blobs(&[[1.0, -2.0]], 40, 1.0, 1);
        let m = kmeans_fit(&data, 1, 9).unwrap();
        for j in 0..2 {
            let mean = data.iter().map(|r| r[j]).sum::<f64>() / data.len() as f64;
            assert!((m.centroids[0][j] - mean).abs() < 1e-12);
        }
        assert!(m.labels.iter().all(|l| *l == Assignment::Cluster(0)));
    }

    #[test]
    fn two_blobs_recover_their_means() {
        let data = blobs(&[[0.0, 0.0], [10.0, 10.0]], 100, 0.5, 2);
        let m = kmeans_fit(&data, 2, 4).unwrap();
        for blob in 0..2 {
            let pts = &data[blob * 100..(blob + 1) * 100];
            let mean = [
                pts.iter().map(|r| r[0]).sum::<f64>() / 100.0,
                pts.iter().map(|r| r[1]).sum::<f64>() / 100.0,
            ];
            let c = &m.centroids[m.nearest(&mean)];
            assert!(squared_euclidean(c, &mean).sqrt() < 0.1);
        }
    }

    #[test]
    fn assign_tie_and_exact_centroid() {
        let m = KMeansModel {
            k: 3,
            centroids: vec![vec![-1.0, 0.0], vec![1.0, 0.0], vec![5.0, 5.0]],
            seed: 0,
            inertia: 0.0,
            params: KMeansParams::default(),
            labels: vec![],
            summaries: vec![],
        };
        assert_eq!(m.assign(&[5.0, 5.0]).unwrap(), Assignment::Cluster(2));
        assert_eq!(m.assign(&[0.0, 0.0]).unwrap(), Assignment::Cluster(0));
        assert!(m.assign(&[0.0]).is_err());
    }

    #[test]
    fn k_out_of_bounds_is_rejected() {
        let data = vec![vec![0.0], vec![1.0]];
        assert!(kmeans_fit(&data, 3, 0).is_err());
        assert!(kmeans_fit(&data, 0, 0).is_err());
    }

    #[test]
    fn inertia_never_increases_across_iterations() {
        let data = blobs(&[[0.0, 0.0], [4.0, 0.0], [2.0, 3.0]], 60, 1.5, 5);
        for seed in 0..10 {
            let mut r = rng(seed);
            let start = plus_plus_init(&data, 3, &mut r);
            let run = lloyd(&data, start, 300, 1e-6);
            for w in run.trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}", run.trace);
            }
        }
    }

    #[test]
    fn training_labels_are_nearest_centroids() {
        let data = blobs(&[[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]], 30, 1.0, 6);
        let m = kmeans_fit(&data, 3, 11).unwrap();
        for (p, l) in data.iter().zip(&m.labels) {
            let c = l.cluster().unwrap();
            let dc = squared_euclidean(p, &m.centroids[c]);
            assert!(m.centroids.iter().all(|o| dc <= squared_euclidean(p, o)));
        }
    }
}
