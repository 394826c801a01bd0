//! MMD-critic prototypes and criticisms, selected per cluster.
//!
//! Prototypes are picked greedily to minimise the squared maximum mean
//! discrepancy between the prototype set and the cluster's points.
//! Criticisms are the remaining points where the witness function (data
//! density minus prototype density) is largest in magnitude. Together they
//! form the labelled seed set for the self-training membership model.

use serde::{Deserialize, Serialize};

use crate::clustering::{Assignment, ClusterModel};
use crate::error::{contract, Result};
use crate::util::squared_euclidean;

/// RBF kernel `exp(-gamma · ‖a - b‖²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "rbf")]
pub struct KernelSpec {
    pub gamma: f64,
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(contract(format!("rbf gamma must be positive, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    /// Median heuristic: `gamma = 1 / (2 · median²)` over pairwise distances
    /// of at most `max_sample` evenly strided points.
    pub fn median_heuristic(points: &[Vec<f64>], max_sample: usize) -> Self {
        let n = points.len();
        let take = n.min(max_sample.max(2));
        let sample: Vec<&Vec<f64>> = (0..take).map(|i| &points[i * n / take.max(1)]).collect();
        let mut dists = Vec::with_capacity(take * take.saturating_sub(1) / 2);
        for i in 0..sample.len() {
            for j in i + 1..sample.len() {
                dists.push(squared_euclidean(sample[i], sample[j]).sqrt());
            }
        }
        if dists.is_empty() {
            return Self { gamma: 1.0 };
        }
        dists.sort_by(f64::total_cmp);
        let mid = dists.len() / 2;
        let median = if dists.len() % 2 == 0 {
            0.5 * (dists[mid - 1] + dists[mid])
        } else {
            dists[mid]
        };
        if median > 0.0 {
            Self {
                gamma: 1.0 / (2.0 * median * median),
            }
        } else {
            Self { gamma: 1.0 }
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        rbf_kernel(a, b, self.gamma)
    }
}

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_euclidean(a, b)).exp()
}

/// Three-term MMD² estimate between prototypes `z` and data `x`.
pub fn mmd_squared(z: &[Vec<f64>], x: &[Vec<f64>], kernel: &KernelSpec) -> f64 {
    let (m, n) = (z.len() as f64, x.len() as f64);
    let mut zz = 0.0;
    for a in z {
        for b in z {
            zz += kernel.eval(a, b);
        }
    }
    let mut zx = 0.0;
    for a in z {
        for b in x {
            zx += kernel.eval(a, b);
        }
    }
    let mut xx = 0.0;
    for a in x {
        for b in x {
            xx += kernel.eval(a, b);
        }
    }
    zz / (m * m) - 2.0 * zx / (m * n) + xx / (n * n)
}

/// Mean kernel similarity of `point` to the data minus that to the prototypes.
pub fn witness(point: &[f64], x: &[Vec<f64>], z: &[Vec<f64>], kernel: &KernelSpec) -> f64 {
    let to_data = x.iter().map(|xi| kernel.eval(point, xi)).sum::<f64>() / x.len() as f64;
    let to_protos = z.iter().map(|zj| kernel.eval(point, zj)).sum::<f64>() / z.len() as f64;
    to_data - to_protos
}

/// Kernel matrix with cached row sums.
struct Gram {
    k: Vec<f64>,
    n: usize,
    row_sums: Vec<f64>,
}

impl Gram {
    fn new(points: &[Vec<f64>], kernel: &KernelSpec) -> Self {
        let n = points.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = kernel.eval(&points[i], &points[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let row_sums = (0..n).map(|i| k[i * n..(i + 1) * n].iter().sum()).collect();
        Self { k, n, row_sums }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }
}

/// Greedy prototype selection: each step adds the point that minimises
/// MMD² of the grown set against `points`; ties go to the lowest index.
pub fn select_prototypes(points: &[Vec<f64>], m: usize, kernel: &KernelSpec) -> Result<Vec<usize>> {
    let n = points.len();
    if m == 0 || m > n {
        return Err(contract(format!("cannot select {m} prototypes from {n} points")));
    }
    let gram = Gram::new(points, kernel);
    let nf = n as f64;
    let mut selected = Vec::with_capacity(m);
    let mut is_selected = vec![false; n];
    // Σ_{s∈S} k(s, c) for every c
    let mut cross = vec![0.0; n];
    let mut sum_ss = 0.0;
    let mut sum_rows = 0.0;

    for step in 1..=m {
        let mf = step as f64;
        let mut best: Option<(usize, f64)> = None;
        for c in 0..n {
            if is_selected[c] {
                continue;
            }
            let zz = sum_ss + 2.0 * cross[c] + gram.at(c, c);
            let zx = sum_rows + gram.row_sums[c];
            // the data-data term is constant and omitted
            let obj = zz / (mf * mf) - 2.0 * zx / (mf * nf);
            if best.is_none_or(|(_, b)| obj < b) {
                best = Some((c, obj));
            }
        }
        let (c, _) = best.expect("m <= n leaves a candidate");
        sum_ss += 2.0 * cross[c] + gram.at(c, c);
        sum_rows += gram.row_sums[c];
        for (j, x) in cross.iter_mut().enumerate() {
            *x += gram.at(c, j);
        }
        is_selected[c] = true;
        selected.push(c);
    }
    Ok(selected)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CriticismSelection {
    pub indices: Vec<usize>,
    pub warnings: Vec<String>,
}

/// The `c` non-prototype points with the largest `|witness|`; ties go to
/// the lowest index. Asking for more than are available returns them all
/// with a warning.
pub fn select_criticisms(
    points: &[Vec<f64>],
    prototypes: &[usize],
    c: usize,
    kernel: &KernelSpec,
) -> Result<CriticismSelection> {
    if prototypes.is_empty() {
        return Err(contract("criticisms need at least one prototype"));
    }
    if prototypes.iter().any(|&p| p >= points.len()) {
        return Err(contract("prototype index out of range"));
    }
    let mut out = CriticismSelection::default();
    if c == 0 {
        return Ok(out);
    }
    let protos: Vec<Vec<f64>> = prototypes.iter().map(|&i| points[i].clone()).collect();
    let mut scored: Vec<(usize, f64)> = (0..points.len())
        .filter(|i| !prototypes.contains(i))
        .map(|i| (i, witness(&points[i], points, &protos, kernel).abs()))
        .collect();
    if c > scored.len() {
        let msg = format!(
            "requested {c} criticisms but only {} non-prototype points exist",
            scored.len()
        );
        log::warn!("{msg}");
        out.warnings.push(msg);
    }
    // stable sort keeps index order among equal witnesses
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    out.indices = scored.into_iter().take(c).map(|(i, _)| i).collect();
    Ok(out)
}

/// Representatives of one cluster, as indices into the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRepresentatives {
    pub cluster: usize,
    pub cardinality: usize,
    pub prototypes: Vec<usize>,
    pub criticisms: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeSet {
    pub share: f64,
    pub kernel: KernelSpec,
    pub clusters: Vec<ClusterRepresentatives>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RepresentativeSet {
    /// `(training row index, cluster)` for every representative.
    pub fn labeled(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .clusters
            .iter()
            .flat_map(|c| {
                c.prototypes
                    .iter()
                    .chain(&c.criticisms)
                    .map(move |&i| (i, c.cluster))
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn len(&self) -> usize {
        self.clusters
            .iter()
            .map(|c| c.prototypes.len() + c.criticisms.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-cluster representative budget and its prototype/criticism split
/// (4:1, prototypes rounded up).
pub fn representative_budget(cardinality: usize, share: f64) -> (usize, usize) {
    let budget = ((share * cardinality as f64).round() as usize).clamp(1, cardinality.max(1));
    let prototypes = (4 * budget).div_ceil(5);
    (prototypes, budget - prototypes)
}

/// Prototypes and criticisms for every non-empty cluster of `model` over the
/// encoded training rows `data`. NOISE points are ignored.
pub fn build_representative_set(
    data: &[Vec<f64>],
    model: &dyn ClusterModel,
    share: f64,
    kernel: KernelSpec,
) -> Result<RepresentativeSet> {
    if !(share > 0.0 && share <= 1.0) {
        return Err(contract(format!("share must lie in (0, 1], got {share}")));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); model.num_clusters()];
    for (i, row) in data.iter().enumerate() {
        if let Assignment::Cluster(c) = model.assign(row)? {
            members[c].push(i);
        }
    }

    let mut set = RepresentativeSet {
        share,
        kernel,
        clusters: Vec::new(),
        warnings: Vec::new(),
    };
    for (cluster, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            set.warnings.push(format!("cluster {cluster} is empty; skipped"));
            continue;
        }
        let points: Vec<Vec<f64>> = idx.iter().map(|&i| data[i].clone()).collect();
        let (n_protos, n_crits) = representative_budget(points.len(), share);
        let protos = select_prototypes(&points, n_protos, &kernel)?;
        let crits = select_criticisms(&points, &protos, n_crits, &kernel)?;
        set.warnings.extend(crits.warnings);
        set.clusters.push(ClusterRepresentatives {
            cluster,
            cardinality: points.len(),
            prototypes: protos.iter().map(|&p| idx[p]).collect(),
            criticisms: crits.indices.iter().map(|&p| idx[p]).collect(),
        });
    }
    Ok(set)
}
