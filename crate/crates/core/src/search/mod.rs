//! Bayesian counterfactual search.
//!
//! [`explain`] scores an initial random batch of perturbations of the
//! origin, then alternates between fitting a [`RegressionForest`] surrogate
//! on everything evaluated so far, ranking a fresh candidate pool by
//! [`expected_improvement`], and scoring the most promising candidates with
//! the true objective. Candidates the model places in the target cluster
//! that also pass the [`OutlierGuard`] are returned, best first.
//!
//! [`Explainer`] bundles the immutable pieces one search needs (training
//! data, encoder, fitted model, guard) and prepares the `S_y` strategies.

mod acquisition;
mod guard;
mod sampler;
mod surrogate;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::clustering::{Assignment, ClusterModel, FittedModel};
use crate::dataspace::{Dataset, Encoder, FeatureSchema, FeatureValue, Instance};
use crate::error::{contract, Error, Result};
use crate::representatives::{build_representative_set, KernelSpec, RepresentativeSet};
use crate::scoring::{
    total_score, CentroidDistanceScore, HardScore, MembershipScore, ScoreBreakdown, SyStrategy,
};
use crate::semisup::{self_train, SelfTrainingConfig, SelfTrainingModel};
use crate::util::{mix_seed, rng};

pub use acquisition::expected_improvement;
pub use guard::{GuardParams, OutlierGuard};
pub use sampler::sample_candidates;
pub use surrogate::RegressionForest;

/// Which `S_y` score drives the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    #[default]
    Hard,
    #[serde(alias = "centroid_distance")]
    Distance,
    #[serde(alias = "membership")]
    Agnostic,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::Hard, StrategyKind::Distance, StrategyKind::Agnostic];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Hard => "hard",
            StrategyKind::Distance => "distance",
            StrategyKind::Agnostic => "agnostic",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "hard" => Ok(StrategyKind::Hard),
            "distance" | "centroid_distance" => Ok(StrategyKind::Distance),
            "agnostic" | "membership" => Ok(StrategyKind::Agnostic),
            other => Err(Error::Usage(format!(
                "unknown strategy `{other}` (expected hard, distance or agnostic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub sy_strategy: StrategyKind,
    /// Random candidates scored before the first surrogate fit.
    pub initial_samples: usize,
    /// Size of the random pool ranked by expected improvement each round.
    pub candidates_per_round: usize,
    /// How many of the top-ranked pool candidates get the true score.
    pub evaluations_per_round: usize,
    pub max_rounds: usize,
    /// Wall-clock budget in seconds, checked before every round.
    pub time_budget: f64,
    pub xi: f64,
    pub surrogate_trees: usize,
    pub rng_seed: u64,
    pub outlier_guard_enabled: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            sy_strategy: StrategyKind::Hard,
            initial_samples: 100,
            candidates_per_round: 500,
            evaluations_per_round: 20,
            max_rounds: 50,
            time_budget: 60.0,
            xi: 0.01,
            surrogate_trees: 100,
            rng_seed: 0,
            outlier_guard_enabled: true,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let usage = |m: &str| Err(Error::Usage(m.to_string()));
        if !(self.xi >= 0.0) {
            return usage("xi must be non-negative");
        }
        if !(self.time_budget > 0.0) {
            return usage("time_budget must be positive");
        }
        if self.initial_samples == 0
            || self.candidates_per_round == 0
            || self.evaluations_per_round == 0
            || self.max_rounds == 0
            || self.surrogate_trees == 0
        {
            return usage("sample, round and tree budgets must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateCounterfactual {
    pub instance: Instance,
    pub breakdown: ScoreBreakdown,
    pub assigned_cluster: Assignment,
    /// The model places the candidate in the target cluster.
    pub valid: bool,
    pub passes_guard: bool,
    /// Seconds since the search started.
    pub found_at: f64,
    /// Zero-based position in the evaluation order.
    pub evaluation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub origin: Instance,
    pub target: usize,
    pub strategy: String,
    /// Valid, guard-passing, positively scored and distinct; descending by
    /// total score, ties broken by evaluation order.
    pub counterfactuals: Vec<CandidateCounterfactual>,
    pub time_to_first: Option<f64>,
    pub time_to_best: Option<f64>,
    pub evaluations: usize,
    pub rounds: usize,
    /// Best returned score after the initial batch and after every round
    /// (0 while nothing has been found).
    pub best_trace: Vec<f64>,
    pub elapsed: f64,
}

impl SearchResult {
    pub fn best(&self) -> Option<&CandidateCounterfactual> {
        self.counterfactuals.first()
    }

    /// Evaluation index of the first counterfactual found.
    pub fn first_evaluation(&self) -> Option<usize> {
        self.counterfactuals.iter().map(|c| c.evaluation).min()
    }

    /// Compact, serialisable view: only changed features, in original
    /// units. Without timings the report is a pure function of the inputs
    /// and the seed.
    pub fn report(&self, schema: &FeatureSchema, include_timings: bool) -> SearchReport {
        let counterfactuals = self
            .counterfactuals
            .iter()
            .map(|c| CounterfactualReport {
                changes: c
                    .instance
                    .changed_features(&self.origin)
                    .into_iter()
                    .map(|j| {
                        let (from, to) = (&self.origin.values[j], &c.instance.values[j]);
                        FeatureChange {
                            feature: schema.get(j).name.clone(),
                            from: from.clone(),
                            to: to.clone(),
                            delta: match (from, to) {
                                (FeatureValue::Num(a), FeatureValue::Num(b)) => Some(b - a),
                                _ => None,
                            },
                        }
                    })
                    .collect(),
                breakdown: c.breakdown,
                assigned_cluster: c.assigned_cluster,
                evaluation: c.evaluation,
                found_at: include_timings.then_some(c.found_at),
            })
            .collect();
        SearchReport {
            origin: self.origin.clone(),
            target: self.target,
            strategy: self.strategy.clone(),
            counterfactuals,
            telemetry: Telemetry {
                evaluations: self.evaluations,
                rounds: self.rounds,
                first_evaluation: self.first_evaluation(),
                best_evaluation: self.best().map(|c| c.evaluation),
                time_to_first: self.time_to_first.filter(|_| include_timings),
                time_to_best: self.time_to_best.filter(|_| include_timings),
                elapsed: include_timings.then_some(self.elapsed),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureChange {
    pub feature: String,
    pub from: FeatureValue,
    pub to: FeatureValue,
    /// `to - from` for numeric features.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualReport {
    pub changes: Vec<FeatureChange>,
    pub breakdown: ScoreBreakdown,
    pub assigned_cluster: Assignment,
    pub evaluation: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub found_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub evaluations: usize,
    pub rounds: usize,
    pub first_evaluation: Option<usize>,
    pub best_evaluation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_to_first: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_to_best: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub origin: Instance,
    pub target: usize,
    pub strategy: String,
    pub counterfactuals: Vec<CounterfactualReport>,
    pub telemetry: Telemetry,
}

/// Borrowed, immutable inputs of one search.
#[derive(Clone, Copy)]
pub struct SearchContext<'a> {
    /// Training schema; its numeric ranges are the frozen Gower ranges.
    pub schema: &'a FeatureSchema,
    pub encoder: &'a Encoder,
    pub model: &'a dyn ClusterModel,
    pub guard: Option<&'a OutlierGuard>,
}

struct Evaluated {
    encoded: Vec<f64>,
    candidate: CandidateCounterfactual,
}

/// Searches for counterfactuals of `origin` in cluster `target`.
pub fn explain(
    origin: &Instance,
    target: usize,
    ctx: &SearchContext<'_>,
    sy: &dyn SyStrategy,
    config: &SearchConfig,
) -> Result<SearchResult> {
    config.validate()?;
    ctx.schema.check(origin)?;
    if ctx.encoder.dim() != ctx.model.dim() {
        return Err(contract("encoder and model dimensions differ"));
    }
    if target >= ctx.model.num_clusters() || ctx.model.summary(target).is_none() {
        return Err(Error::Precondition(format!("cluster {target} does not exist")));
    }
    let origin_encoded = ctx.encoder.encode(origin)?;
    if ctx.model.assign(&origin_encoded)? == Assignment::Cluster(target) {
        return Err(Error::Precondition(format!(
            "the instance is already in cluster {target}"
        )));
    }
    let guard = if config.outlier_guard_enabled {
        Some(ctx.guard.ok_or_else(|| {
            Error::Precondition("the outlier guard must be fitted before searching".into())
        })?)
    } else {
        None
    };

    let start = Instant::now();
    let mut r = rng(config.rng_seed);
    let mut evaluated: Vec<Evaluated> = Vec::new();

    let evaluate = |batch: Vec<Instance>, evaluated: &mut Vec<Evaluated>| -> Result<()> {
        for instance in batch {
            let encoded = ctx.encoder.encode(&instance)?;
            let assigned = ctx.model.assign(&encoded)?;
            let breakdown = total_score(&instance, origin, ctx.schema, &encoded, target, sy)?;
            let valid = assigned == Assignment::Cluster(target);
            let passes_guard = match guard {
                Some(g) if valid => g.passes(&encoded)?,
                Some(_) => false,
                None => true,
            };
            let evaluation = evaluated.len();
            evaluated.push(Evaluated {
                encoded,
                candidate: CandidateCounterfactual {
                    instance,
                    breakdown,
                    assigned_cluster: assigned,
                    valid,
                    passes_guard,
                    found_at: start.elapsed().as_secs_f64(),
                    evaluation,
                },
            });
        }
        Ok(())
    };
    let returnable = |c: &CandidateCounterfactual| c.valid && c.passes_guard && c.breakdown.total > 0.0;
    let best_so_far = |evaluated: &[Evaluated]| {
        evaluated
            .iter()
            .filter(|e| returnable(&e.candidate))
            .map(|e| e.candidate.breakdown.total)
            .fold(0.0, f64::max)
    };

    let initial = sample_candidates(origin, ctx.schema, config.initial_samples, &mut r);
    let can_move = !initial.is_empty();
    evaluate(initial, &mut evaluated)?;
    let mut best_trace = vec![best_so_far(&evaluated)];

    let mut rounds = 0;
    while can_move && rounds < config.max_rounds && start.elapsed().as_secs_f64() < config.time_budget {
        let x: Vec<Vec<f64>> = evaluated.iter().map(|e| e.encoded.clone()).collect();
        let y: Vec<f64> = evaluated.iter().map(|e| e.candidate.breakdown.total).collect();
        let incumbent = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let forest = RegressionForest::fit(
            &x,
            &y,
            config.surrogate_trees,
            mix_seed(config.rng_seed, rounds as u64 + 1),
        )?;

        let pool = sample_candidates(origin, ctx.schema, config.candidates_per_round, &mut r);
        let mut ranked: Vec<(f64, usize)> = pool
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let (mean, std) = forest.predict(&ctx.encoder.encode(c)?);
                Ok((expected_improvement(mean, std, incumbent, config.xi), i))
            })
            .collect::<Result<_>>()?;
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut chosen: Vec<usize> = ranked
            .iter()
            .take(config.evaluations_per_round)
            .map(|&(_, i)| i)
            .collect();
        chosen.sort_unstable();
        let mut pool: Vec<Option<Instance>> = pool.into_iter().map(Some).collect();
        let batch = chosen.iter().filter_map(|&i| pool[i].take()).collect();
        evaluate(batch, &mut evaluated)?;
        rounds += 1;
        best_trace.push(best_so_far(&evaluated));
    }

    let evaluations = evaluated.len();
    let mut seen = HashSet::new();
    let mut counterfactuals: Vec<CandidateCounterfactual> = evaluated
        .into_iter()
        .filter(|e| returnable(&e.candidate))
        .filter(|e| seen.insert(e.encoded.iter().map(|v| v.to_bits()).collect::<Vec<u64>>()))
        .map(|e| e.candidate)
        .collect();
    counterfactuals.sort_by(|a, b| {
        b.breakdown
            .total
            .total_cmp(&a.breakdown.total)
            .then(a.evaluation.cmp(&b.evaluation))
    });
    let time_to_first = counterfactuals
        .iter()
        .min_by_key(|c| c.evaluation)
        .map(|c| c.found_at);
    let time_to_best = counterfactuals.first().map(|c| c.found_at);

    Ok(SearchResult {
        origin: origin.clone(),
        target,
        strategy: sy.name().to_string(),
        counterfactuals,
        time_to_first,
        time_to_best,
        evaluations,
        rounds,
        best_trace,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Knobs for preparing an `S_y` strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyOptions {
    /// Share of each cluster used as labelled representatives (agnostic).
    pub share: f64,
    pub self_training: SelfTrainingConfig,
    /// Points used for the kernel-width median heuristic.
    pub kernel_sample: usize,
}

impl Default for StrategyOptions {
    fn default() -> Self {
        Self {
            share: 0.2,
            self_training: SelfTrainingConfig::default(),
            kernel_sample: 500,
        }
    }
}

/// A strategy with any state it needs already fitted.
#[derive(Debug, Clone)]
pub enum PreparedStrategy {
    Hard,
    Distance,
    Agnostic {
        representatives: RepresentativeSet,
        membership: Box<SelfTrainingModel>,
    },
}

impl PreparedStrategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            PreparedStrategy::Hard => StrategyKind::Hard,
            PreparedStrategy::Distance => StrategyKind::Distance,
            PreparedStrategy::Agnostic { .. } => StrategyKind::Agnostic,
        }
    }

    pub fn scorer<'a>(&'a self, model: &'a dyn ClusterModel) -> Box<dyn SyStrategy + 'a> {
        match self {
            PreparedStrategy::Hard => Box::new(HardScore { model }),
            PreparedStrategy::Distance => Box::new(CentroidDistanceScore::for_model(model)),
            PreparedStrategy::Agnostic { membership, .. } => Box::new(MembershipScore {
                provider: membership.as_ref(),
            }),
        }
    }
}

/// Fits the agnostic strategy: MMD-critic representatives of every cluster
/// become the labelled seeds of a self-trained tree ensemble, with all other
/// training rows as the unlabelled pool.
pub fn prepare_agnostic(
    encoded: &[Vec<f64>],
    model: &dyn ClusterModel,
    options: &StrategyOptions,
) -> Result<(RepresentativeSet, SelfTrainingModel)> {
    let kernel = KernelSpec::median_heuristic(encoded, options.kernel_sample);
    let reps = build_representative_set(encoded, model, options.share, kernel)?;
    let labeled = reps.labeled();
    let mut is_seed = vec![false; encoded.len()];
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for &(row, cluster) in &labeled {
        is_seed[row] = true;
        lx.push(encoded[row].clone());
        ly.push(cluster);
    }
    let unlabeled: Vec<Vec<f64>> = encoded
        .iter()
        .zip(&is_seed)
        .filter(|(_, s)| !**s)
        .map(|(x, _)| x.clone())
        .collect();
    let classes: Vec<usize> = (0..model.num_clusters()).collect();
    let membership = self_train(&lx, &ly, &unlabeled, &classes, &options.self_training)?;
    Ok((reps, membership))
}

/// Training data, encoder, fitted model and outlier guard, ready to explain.
#[derive(Debug, Clone)]
pub struct Explainer {
    pub dataset: Dataset,
    pub encoder: Encoder,
    pub model: FittedModel,
    /// Encoded training rows.
    pub encoded: Vec<Vec<f64>>,
    pub guard: OutlierGuard,
}

impl Explainer {
    pub fn new(dataset: Dataset, encoder: Encoder, model: FittedModel, guard: &GuardParams) -> Result<Self> {
        let encoded = encoder.encode_all(&dataset.rows)?;
        if encoder.dim() != model.dim() {
            return Err(contract(format!(
                "model was fitted in {} dimensions, the encoder produces {}",
                model.dim(),
                encoder.dim()
            )));
        }
        let guard = OutlierGuard::fit(&encoded, guard)?;
        Ok(Self {
            dataset,
            encoder,
            model,
            encoded,
            guard,
        })
    }

    pub fn context(&self) -> SearchContext<'_> {
        SearchContext {
            schema: &self.dataset.schema,
            encoder: &self.encoder,
            model: &self.model,
            guard: Some(&self.guard),
        }
    }

    /// Cluster of training row `row`.
    pub fn assignment(&self, row: usize) -> Result<Assignment> {
        let x = self
            .encoded
            .get(row)
            .ok_or_else(|| Error::Usage(format!("row {row} is out of range (dataset has {})", self.encoded.len())))?;
        self.model.assign(x)
    }

    pub fn prepare(&self, kind: StrategyKind, options: &StrategyOptions) -> Result<PreparedStrategy> {
        Ok(match kind {
            StrategyKind::Hard => PreparedStrategy::Hard,
            StrategyKind::Distance => PreparedStrategy::Distance,
            StrategyKind::Agnostic => {
                let (representatives, membership) = prepare_agnostic(&self.encoded, &self.model, options)?;
                PreparedStrategy::Agnostic {
                    representatives,
                    membership: Box::new(membership),
                }
            }
        })
    }

    /// Explains training row `row` towards `target`.
    pub fn explain_row(
        &self,
        row: usize,
        target: usize,
        strategy: &PreparedStrategy,
        config: &SearchConfig,
    ) -> Result<SearchResult> {
        let origin = self
            .dataset
            .rows
            .get(row)
            .ok_or_else(|| Error::Usage(format!("row {row} is out of range (dataset has {})", self.dataset.len())))?;
        let scorer = strategy.scorer(&self.model);
        explain(origin, target, &self.context(), scorer.as_ref(), config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::kmeans_fit;

    /// Two blobs that differ only in the first feature.
    fn two_blobs() -> Explainer {
        let mut r = rng(11);
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|i| {
                let shift = if i < 40 { 0.0 } else { 1.0 };
                vec![
                    shift + rand::Rng::random_range(&mut r, -0.1..0.1),
                    rand::Rng::random_range(&mut r, 0.0..1.0),
                ]
            })
            .collect();
        let ds = Dataset::from_numeric("blobs", &["a", "b"], &rows).unwrap();
        let enc = Encoder::fit(&ds, false);
        let encoded = enc.encode_all(&ds.rows).unwrap();
        let model = FittedModel::Kmeans(kmeans_fit(&encoded, 2, 0).unwrap());
        Explainer::new(ds, enc, model, &GuardParams::default()).unwrap()
    }

    fn quick(seed: u64) -> SearchConfig {
        SearchConfig {
            initial_samples: 30,
            candidates_per_round: 100,
            evaluations_per_round: 10,
            max_rounds: 5,
            surrogate_trees: 20,
            time_budget: 600.0,
            rng_seed: seed,
            ..SearchConfig::default()
        }
    }

    fn other_cluster(ex: &Explainer, row: usize) -> usize {
        1 - ex.assignment(row).unwrap().cluster().unwrap()
    }

    #[test]
    fn hard_search_finds_valid_counterfactuals() {
        let ex = two_blobs();
        let target = other_cluster(&ex, 0);
        let res = ex.explain_row(0, target, &PreparedStrategy::Hard, &quick(1)).unwrap();
        assert!(!res.counterfactuals.is_empty());
        for c in &res.counterfactuals {
            let enc = ex.encoder.encode(&c.instance).unwrap();
            assert_eq!(ex.model.assign(&enc).unwrap(), Assignment::Cluster(target));
            assert!(ex.guard.passes(&enc).unwrap());
            assert!(c.breakdown.total > 0.0 && c.breakdown.total <= 1.0);
        }
        assert!(res.time_to_first.unwrap() <= res.time_to_best.unwrap());
        assert!(res.best_trace.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(res.evaluations, 30 + 5 * 10);
    }

    #[test]
    fn results_are_sorted_and_distinct() {
        let ex = two_blobs();
        let target = other_cluster(&ex, 3);
        let res = ex.explain_row(3, target, &PreparedStrategy::Distance, &quick(2)).unwrap();
        let totals: Vec<f64> = res.counterfactuals.iter().map(|c| c.breakdown.total).collect();
        assert!(totals.windows(2).all(|w| w[0] >= w[1]));
        for (i, a) in res.counterfactuals.iter().enumerate() {
            for b in &res.counterfactuals[i + 1..] {
                assert_ne!(a.instance, b.instance);
            }
        }
    }

    #[test]
    fn fixed_seed_replays_exactly() {
        let ex = two_blobs();
        let target = other_cluster(&ex, 5);
        let run = || {
            let res = ex.explain_row(5, target, &PreparedStrategy::Hard, &quick(7)).unwrap();
            serde_json::to_string(&res.report(&ex.dataset.schema, false)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn preconditions() {
        let ex = two_blobs();
        let own = ex.assignment(0).unwrap().cluster().unwrap();
        let err = ex.explain_row(0, own, &PreparedStrategy::Hard, &quick(0)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let err = ex.explain_row(0, 7, &PreparedStrategy::Hard, &quick(0)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let bad = SearchConfig { xi: -1.0, ..quick(0) };
        assert!(ex.explain_row(0, 1 - own, &PreparedStrategy::Hard, &bad).is_err());
    }

    #[test]
    fn guard_is_required_when_enabled() {
        let ex = two_blobs();
        let target = other_cluster(&ex, 0);
        let ctx = SearchContext { guard: None, ..ex.context() };
        let sy = HardScore { model: &ex.model };
        let origin = &ex.dataset.rows[0];
        assert!(explain(origin, target, &ctx, &sy, &quick(0)).is_err());
        let off = SearchConfig { outlier_guard_enabled: false, ..quick(0) };
        let res = explain(origin, target, &ctx, &sy, &off).unwrap();
        assert!(res.counterfactuals.iter().all(|c| c.passes_guard));
    }

    #[test]
    fn agnostic_strategy_prepares_and_runs() {
        let ex = two_blobs();
        let prepared = ex.prepare(StrategyKind::Agnostic, &StrategyOptions::default()).unwrap();
        if let PreparedStrategy::Agnostic { representatives, .. } = &prepared {
            // 20% of each 40-point cluster
            assert_eq!(representatives.len(), 16);
        } else {
            panic!("wrong variant");
        }
        let target = other_cluster(&ex, 0);
        let res = ex.explain_row(0, target, &prepared, &quick(3)).unwrap();
        assert_eq!(res.strategy, "agnostic");
        for c in &res.counterfactuals {
            assert_eq!(c.assigned_cluster, Assignment::Cluster(target));
        }
    }

    #[test]
    fn report_lists_only_changes() {
        let ex = two_blobs();
        let target = other_cluster(&ex, 0);
        let res = ex.explain_row(0, target, &PreparedStrategy::Hard, &quick(4)).unwrap();
        let rep = res.report(&ex.dataset.schema, true);
        for (c, r) in res.counterfactuals.iter().zip(&rep.counterfactuals) {
            assert_eq!(r.changes.len(), c.instance.changed_features(&res.origin).len());
            assert!(r.changes.iter().all(|ch| ch.delta.unwrap() != 0.0));
        }
        let json = serde_json::to_value(res.report(&ex.dataset.schema, false)).unwrap();
        assert!(json["telemetry"].get("time_to_first").is_none());
    }

    #[test]
    fn strategy_names_parse() {
        assert_eq!("centroid_distance".parse::<StrategyKind>().unwrap(), StrategyKind::Distance);
        assert_eq!("membership".parse::<StrategyKind>().unwrap(), StrategyKind::Agnostic);
        assert!("soft".parse::<StrategyKind>().is_err());
        let cfg: SearchConfig = serde_json::from_str(r#"{"sy_strategy": "membership"}"#).unwrap();
        assert_eq!(cfg.sy_strategy, StrategyKind::Agnostic);
    }
}
