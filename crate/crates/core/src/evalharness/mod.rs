//! Benchmark protocol and metrics.
//!
//! Instances are drawn from the largest clusters, each one explained towards
//! the other large cluster several times with paired seeds, and every
//! strategy is summarised as a [`MetricsRow`]: Exp% plus mean/std of the
//! quality scores, timings and counterfactual counts.

mod stats;
mod tables;

use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use crate::clustering::{Assignment, ClusterModel};
use crate::error::{contract, Result};
use crate::search::{Explainer, PreparedStrategy, SearchConfig, SearchReport, StrategyKind, StrategyOptions};
use crate::util::{mean_std, mix_seed, rng};

pub use stats::{mann_whitney_u, MannWhitney};
pub use tables::{emit_csv, format_table, parse_csv, TableRow, CSV_HEADER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolSpec {
    pub instances_per_cluster: usize,
    pub top_clusters: usize,
    pub repeats: usize,
    pub strategies: Vec<StrategyKind>,
    /// Representative shares for the agnostic strategy, one row each.
    pub shares: Vec<f64>,
    /// Seeds instance selection and, through derived streams, every run.
    pub seed: u64,
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        Self {
            instances_per_cluster: 5,
            top_clusters: 2,
            repeats: 3,
            strategies: StrategyKind::ALL.to_vec(),
            shares: vec![0.2],
            seed: 0,
        }
    }
}

impl ProtocolSpec {
    pub fn runs_per_strategy(&self) -> usize {
        self.instances_per_cluster * self.top_clusters * self.repeats
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolPick {
    /// Training row to explain.
    pub row: usize,
    pub source: usize,
    pub target: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSelection {
    pub picks: Vec<ProtocolPick>,
    /// Cluster ids ordered by decreasing cardinality (ties: lower id first).
    pub ranked_clusters: Vec<(usize, usize)>,
    pub warnings: Vec<String>,
}

/// Picks the instances to explain.
///
/// The `top_clusters` largest clusters are taken in decreasing size and each
/// one targets the next (the last wraps to the first); with the default of
/// two, B targets C and C targets B. `instances_per_cluster` members of every
/// source are drawn without replacement.
pub fn select_protocol_instances(
    labels: &[Assignment],
    spec: &ProtocolSpec,
    seed: u64,
) -> Result<ProtocolSelection> {
    let k = labels.iter().filter_map(|a| a.cluster()).max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, a) in labels.iter().enumerate() {
        if let Assignment::Cluster(c) = a {
            members[*c].push(i);
        }
    }
    let mut ranked: Vec<(usize, usize)> = members
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(c, m)| (c, m.len()))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    if ranked.len() < 2 {
        return Err(contract("the protocol needs at least two non-empty clusters"));
    }
    let top = spec.top_clusters.clamp(2, ranked.len());
    let mut sel = ProtocolSelection {
        ranked_clusters: ranked.clone(),
        ..Default::default()
    };
    if spec.top_clusters > ranked.len() {
        sel.warnings.push(format!(
            "only {} clusters available, {} requested",
            ranked.len(),
            spec.top_clusters
        ));
    }
    for i in 0..top {
        let source = ranked[i].0;
        let target = ranked[(i + 1) % top].0;
        let pool = &members[source];
        let take = spec.instances_per_cluster.min(pool.len());
        if take < spec.instances_per_cluster {
            sel.warnings.push(format!(
                "cluster {source} has {} members, fewer than {}; all are used",
                pool.len(),
                spec.instances_per_cluster
            ));
        }
        let mut r = rng(mix_seed(seed, source as u64));
        let mut rows: Vec<usize> = sample_indices(&mut r, pool.len(), take)
            .into_iter()
            .map(|j| pool[j])
            .collect();
        rows.sort_unstable();
        sel.picks.extend(rows.into_iter().map(|row| ProtocolPick { row, source, target }));
    }
    Ok(sel)
}

/// How quality scores are pooled across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// One value per successful run: its best counterfactual.
    #[default]
    BestPerRun,
    /// Every returned counterfactual of every successful run.
    AllCounterfactuals,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population statistics, `None` for no values.
    pub fn of(values: &[f64]) -> Option<Self> {
        mean_std(values).map(|(mean, std)| Self { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub runs: usize,
    pub explained: usize,
    pub exp_pct: f64,
    pub score_x: Option<MeanStd>,
    pub score_f: Option<MeanStd>,
    pub time_to_first: Option<MeanStd>,
    pub time_to_best: Option<MeanStd>,
    /// Over successful runs only.
    pub cf_count: Option<MeanStd>,
}

/// Outcome of one explain run, reduced to what the metrics need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: StrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub share: Option<f64>,
    pub row: usize,
    pub source: usize,
    pub target: usize,
    pub repeat: usize,
    pub seed: u64,
    /// `(score_x, score_f)` of every counterfactual, best first.
    pub scores: Vec<(f64, f64)>,
    pub time_to_first: Option<f64>,
    pub time_to_best: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<SearchReport>,
}

impl RunRecord {
    pub fn explained(&self) -> bool {
        !self.scores.is_empty()
    }
}

/// Folds run records into a metrics row. The result does not depend on the
/// order of `runs`.
pub fn aggregate(runs: &[&RunRecord], aggregation: Aggregation) -> MetricsRow {
    let ok: Vec<&&RunRecord> = runs.iter().filter(|r| r.explained()).collect();
    let pooled: Vec<(f64, f64)> = match aggregation {
        Aggregation::BestPerRun => ok.iter().map(|r| r.scores[0]).collect(),
        Aggregation::AllCounterfactuals => ok.iter().flat_map(|r| r.scores.iter().copied()).collect(),
    };
    let mut sx: Vec<f64> = pooled.iter().map(|p| p.0).collect();
    let mut sf: Vec<f64> = pooled.iter().map(|p| p.1).collect();
    let mut t1: Vec<f64> = ok.iter().filter_map(|r| r.time_to_first).collect();
    let mut tb: Vec<f64> = ok.iter().filter_map(|r| r.time_to_best).collect();
    let mut n: Vec<f64> = ok.iter().map(|r| r.scores.len() as f64).collect();
    // summation order must not depend on the run order
    for v in [&mut sx, &mut sf, &mut t1, &mut tb, &mut n] {
        v.sort_by(f64::total_cmp);
    }
    MetricsRow {
        runs: runs.len(),
        explained: ok.len(),
        exp_pct: if runs.is_empty() {
            0.0
        } else {
            100.0 * ok.len() as f64 / runs.len() as f64
        },
        score_x: MeanStd::of(&sx),
        score_f: MeanStd::of(&sf),
        time_to_first: MeanStd::of(&t1),
        time_to_best: MeanStd::of(&tb),
        cf_count: MeanStd::of(&n),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub model: String,
    pub strategy: String,
    pub share: Option<f64>,
    pub metrics: MetricsRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub search: SearchConfig,
    pub options: StrategyOptions,
    pub aggregation: Aggregation,
    /// Keep every run's full report in the run log.
    pub keep_reports: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            options: StrategyOptions::default(),
            aggregation: Aggregation::BestPerRun,
            keep_reports: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchMetadata {
    pub dataset: String,
    pub model: String,
    pub rows: usize,
    /// Training cardinality of every cluster, by id.
    pub cluster_sizes: Vec<usize>,
    pub noise_points: usize,
    pub protocol: ProtocolSpec,
    pub config: BenchConfig,
    pub selection: ProtocolSelection,
    /// Denominator conventions for the reported statistics.
    pub denominators: String,
    /// Free-form remarks, e.g. preprocessing deviations.
    pub notes: Vec<String>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchRow>,
    pub runs: Vec<RunRecord>,
    pub metadata: BenchMetadata,
}

impl BenchmarkReport {
    /// Runs belonging to one strategy (and share, for the agnostic one).
    pub fn runs_for(&self, strategy: StrategyKind, share: Option<f64>) -> Vec<&RunRecord> {
        self.runs
            .iter()
            .filter(|r| r.strategy == strategy && r.share == share)
            .collect()
    }

    pub fn row(&self, strategy: StrategyKind, share: Option<f64>) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy.as_str() && r.share == share)
    }

    /// Per-run `(score_x, score_f)` samples under the report's aggregation.
    pub fn score_samples(&self, strategy: StrategyKind, share: Option<f64>) -> (Vec<f64>, Vec<f64>) {
        let mut sx = Vec::new();
        let mut sf = Vec::new();
        for r in self.runs_for(strategy, share).into_iter().filter(|r| r.explained()) {
            let pooled: &[(f64, f64)] = match self.metadata.config.aggregation {
                Aggregation::BestPerRun => &r.scores[..1],
                Aggregation::AllCounterfactuals => &r.scores,
            };
            for &(x, f) in pooled {
                sx.push(x);
                sf.push(f);
            }
        }
        (sx, sf)
    }

    /// JSON run log: metadata plus every run record.
    pub fn run_log(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the protocol for every requested strategy (and, for the agnostic
/// strategy, every share). Runs are paired: run `i` uses the same seed under
/// every strategy. A run that errors counts as unexplained.
pub fn run_benchmark(explainer: &Explainer, spec: &ProtocolSpec, config: &BenchConfig) -> Result<BenchmarkReport> {
    if spec.strategies.is_empty() {
        return Err(contract("no strategies requested"));
    }
    if spec.repeats == 0 || spec.instances_per_cluster == 0 {
        return Err(contract("repeats and instances per cluster must be positive"));
    }
    config.search.validate()?;
    let started = Instant::now();
    let labels: Vec<Assignment> = explainer
        .encoded
        .iter()
        .map(|x| explainer.model.assign(x))
        .collect::<Result<_>>()?;
    let selection = select_protocol_instances(&labels, spec, spec.seed)?;
    for w in &selection.warnings {
        log::warn!("{w}");
    }

    let mut variants: Vec<(StrategyKind, Option<f64>)> = Vec::new();
    for &s in &spec.strategies {
        if s == StrategyKind::Agnostic {
            if spec.shares.is_empty() {
                return Err(contract("the agnostic strategy needs at least one share"));
            }
            variants.extend(spec.shares.iter().map(|&sh| (s, Some(sh))));
        } else if !variants.contains(&(s, None)) {
            variants.push((s, None));
        }
    }

    let dataset = explainer.dataset.id.clone();
    let model = explainer.model.algorithm().to_string();
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for (kind, share) in variants {
        let options = StrategyOptions {
            share: share.unwrap_or(config.options.share),
            ..config.options
        };
        let prepared = explainer.prepare(kind, &options)?;
        let first = runs.len();
        for (p, pick) in selection.picks.iter().enumerate() {
            for repeat in 0..spec.repeats {
                let seed = mix_seed(spec.seed, (p * spec.repeats + repeat) as u64 + 1);
                runs.push(one_run(explainer, &prepared, kind, share, *pick, repeat, seed, config));
            }
        }
        let mine: Vec<&RunRecord> = runs[first..].iter().collect();
        let metrics = aggregate(&mine, config.aggregation);
        log::info!(
            "{dataset}/{model}/{kind}{}: Exp% {:.1}",
            share.map_or(String::new(), |s| format!(" share {s}")),
            metrics.exp_pct
        );
        rows.push(BenchRow {
            dataset: dataset.clone(),
            model: model.clone(),
            strategy: kind.as_str().to_string(),
            share,
            metrics,
        });
    }

    let mut cluster_sizes = vec![0; explainer.model.num_clusters()];
    let mut noise_points = 0;
    for a in &labels {
        match a {
            Assignment::Cluster(c) => cluster_sizes[*c] += 1,
            Assignment::Noise => noise_points += 1,
        }
    }
    let metadata = BenchMetadata {
        dataset,
        model,
        rows: explainer.dataset.len(),
        cluster_sizes,
        noise_points,
        protocol: spec.clone(),
        config: config.clone(),
        selection,
        denominators: "exp_pct over all runs; score, time and count statistics over successful runs only; \
                       population standard deviation"
            .into(),
        notes: Vec::new(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(BenchmarkReport { rows, runs, metadata })
}

#[allow(clippy::too_many_arguments)]
fn one_run(
    explainer: &Explainer,
    prepared: &PreparedStrategy,
    strategy: StrategyKind,
    share: Option<f64>,
    pick: ProtocolPick,
    repeat: usize,
    seed: u64,
    config: &BenchConfig,
) -> RunRecord {
    let search = SearchConfig {
        sy_strategy: strategy,
        rng_seed: seed,
        ..config.search.clone()
    };
    let mut record = RunRecord {
        strategy,
        share,
        row: pick.row,
        source: pick.source,
        target: pick.target,
        repeat,
        seed,
        scores: Vec::new(),
        time_to_first: None,
        time_to_best: None,
        error: None,
        result: None,
    };
    match explainer.explain_row(pick.row, pick.target, prepared, &search) {
        Ok(res) => {
            record.scores = res
                .counterfactuals
                .iter()
                .map(|c| (c.breakdown.s_x, c.breakdown.s_f))
                .collect();
            record.time_to_first = res.time_to_first;
            record.time_to_best = res.time_to_best;
            if config.keep_reports {
                record.result = Some(res.report(&explainer.dataset.schema, true));
            }
        }
        Err(e) => {
            log::warn!("run on row {} failed: {e}", pick.row);
            record.error = Some(e.to_string());
        }
    }
    record
}

/// True when `sizes` is some permutation of `reference` with every pair
/// within `tolerance`. Sizes are compared after sorting both lists.
pub fn cardinalities_match(sizes: &[usize], reference: &[usize], tolerance: usize) -> bool {
    if sizes.len() != reference.len() {
        return false;
    }
    let mut a = sizes.to_vec();
    let mut b = reference.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a.iter().zip(&b).all(|(x, y)| x.abs_diff(*y) <= tolerance)
}
