//! The `clustercf` command line: `fit`, `explain`, `represent` and `bench`.
//!
//! Settings resolve as flags, then the JSON config file, then built-in
//! defaults; `CLUSTERCF_SEED` replaces the default seed. Every command that
//! writes results also writes the resolved [`RunManifest`].
//!
//! Exit codes: 0 on success (including searches that found nothing), 2 for
//! usage errors, 1 for everything else.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::clustering::{dbscan_fit, kmeans_fit, Assignment, ClusterModel, FittedModel};
use crate::dataspace::{load_csv, CsvOptions, Dataset, Encoder};
use crate::error::{Error, Result};
use crate::evalharness::{emit_csv, format_table, run_benchmark, Aggregation, BenchConfig, ProtocolSpec};
use crate::representatives::{build_representative_set, KernelSpec, RepresentativeSet};
use crate::search::{Explainer, GuardParams, SearchConfig, SearchReport, StrategyKind, StrategyOptions};

pub const SEED_ENV: &str = "CLUSTERCF_SEED";

#[derive(Debug, Parser)]
#[command(name = "clustercf", version, about = "Counterfactual explanations for clustering models")]
pub struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a clustering model and write it (with its encoder) as JSON.
    Fit(FitArgs),
    /// Search counterfactuals for one training row.
    Explain(ExplainArgs),
    /// Select prototypes and criticisms of every cluster.
    Represent(RepresentArgs),
    /// Run the benchmark protocol and emit the metrics table.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Kmeans,
    Dbscan,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV with a header row.
    pub data: PathBuf,

    /// Comma-separated columns to treat as categorical.
    #[arg(long, value_delimiter = ',')]
    pub categorical: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub algo: Option<Algorithm>,

    /// Number of k-means clusters.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,

    #[arg(long)]
    pub eps: Option<f64>,

    #[arg(long = "min-pts", value_parser = clap::value_parser!(u64).range(1..))]
    pub min_pts: Option<u64>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Cluster raw feature values instead of standardised ones.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Output path; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchFlags {
    #[arg(long)]
    pub initial_samples: Option<usize>,
    #[arg(long)]
    pub candidates_per_round: Option<usize>,
    #[arg(long)]
    pub evaluations_per_round: Option<usize>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// Seconds.
    #[arg(long)]
    pub time_budget: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub surrogate_trees: Option<usize>,
    /// Disable the outlier guard.
    #[arg(long)]
    pub no_guard: bool,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Model file written by `fit`.
    #[arg(long)]
    pub model: PathBuf,

    /// Zero-based training row to explain.
    #[arg(long)]
    pub instance: usize,

    /// Target cluster id.
    #[arg(long)]
    pub target: String,

    #[arg(long)]
    pub strategy: Option<StrategyKind>,

    /// Representative share for the agnostic strategy.
    #[arg(long)]
    pub share: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[command(flatten)]
    pub search: SearchFlags,

    /// Include wall-clock timings in the JSON (makes it run-dependent).
    #[arg(long)]
    pub timings: bool,

    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RepresentArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub model: PathBuf,

    #[arg(long)]
    pub share: Option<f64>,

    /// RBF kernel width; median heuristic when absent.
    #[arg(long)]
    pub gamma: Option<f64>,

    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Model file; otherwise the model is fitted from the model flags.
    #[arg(long)]
    pub model: Option<PathBuf>,

    #[command(flatten)]
    pub fit: ModelArgs,

    #[arg(long, value_delimiter = ',')]
    pub strategies: Vec<StrategyKind>,

    #[arg(long, value_delimiter = ',')]
    pub shares: Vec<f64>,

    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: Option<u64>,

    #[arg(long = "instances-per-cluster", value_parser = clap::value_parser!(u64).range(1..))]
    pub instances_per_cluster: Option<u64>,

    /// Pool every counterfactual instead of each run's best.
    #[arg(long)]
    pub all_counterfactuals: bool,

    #[command(flatten)]
    pub search: SearchFlags,

    /// Metrics CSV path; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    /// JSON run log with every individual result.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

/// Values the config file may set. Absent fields fall through to defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub algo: Option<Algorithm>,
    pub k: Option<usize>,
    pub eps: Option<f64>,
    pub min_pts: Option<usize>,
    pub standardize: Option<bool>,
    pub categorical: Option<Vec<String>>,
    pub share: Option<f64>,
    pub search: Option<SearchConfig>,
    pub strategies: Option<Vec<StrategyKind>>,
    pub shares: Option<Vec<f64>>,
    pub repeats: Option<usize>,
    pub instances_per_cluster: Option<usize>,
    pub aggregation: Option<Aggregation>,
}

/// What a run actually used, written next to its results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub dataset_path: PathBuf,
    pub model_path: Option<PathBuf>,
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    /// Other resolved settings of the command.
    pub settings: serde_json::Value,
}

/// Fitted model plus the encoder its inputs go through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub dataset: String,
    pub encoder: Encoder,
    pub model: FittedModel,
    pub manifest: RunManifest,
}

#[derive(Debug, Serialize)]
struct ExplainOutput<'a> {
    manifest: &'a RunManifest,
    result: &'a SearchReport,
}

#[derive(Debug, Serialize)]
struct RepresentOutput<'a> {
    manifest: &'a RunManifest,
    representatives: &'a RepresentativeSet,
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Usage(e.to_string()))?;
    run(cli)
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => serde_json::from_str::<FileConfig>(&fs::read_to_string(p)?)
            .map_err(|e| Error::Usage(format!("config {}: {e}", p.display())))?,
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, &file, cli.config.as_deref()),
        Command::Explain(a) => cmd_explain(a, &file, cli.config.as_deref()),
        Command::Represent(a) => cmd_represent(a, &file, cli.config.as_deref()),
        Command::Bench(a) => cmd_bench(a, &file, cli.config.as_deref()),
    }
}

fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> Result<u64> {
    if let Some(s) = flag.or(file.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

fn load_data(args: &DataArgs, file: &FileConfig) -> Result<Dataset> {
    let mut hints: BTreeSet<String> = args.categorical.iter().cloned().collect();
    if args.categorical.is_empty() {
        hints.extend(file.categorical.iter().flatten().cloned());
    }
    let options = CsvOptions {
        categorical_hints: hints,
        ..CsvOptions::with_header()
    };
    load_csv(&args.data, &options)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct FitSettings {
    algo: Algorithm,
    k: Option<usize>,
    eps: Option<f64>,
    min_pts: Option<usize>,
    standardize: bool,
}

fn fit_model(ds: &Dataset, args: &ModelArgs, file: &FileConfig, seed: u64) -> Result<(Encoder, FittedModel, FitSettings)> {
    let algo = args.algo.or(file.algo).unwrap_or(Algorithm::Kmeans);
    let standardize = if args.raw { false } else { file.standardize.unwrap_or(true) };
    let encoder = Encoder::fit(ds, standardize);
    let x = encoder.encode_all(&ds.rows)?;
    let mut settings = FitSettings {
        algo,
        k: None,
        eps: None,
        min_pts: None,
        standardize,
    };
    let model = match algo {
        Algorithm::Kmeans => {
            let k = args.k.map(|k| k as usize).or(file.k).unwrap_or(3);
            if k == 0 {
                return Err(Error::Usage("k must be at least 1".into()));
            }
            if k > x.len() {
                return Err(Error::Usage(format!("k = {k} exceeds the {} rows", x.len())));
            }
            settings.k = Some(k);
            FittedModel::Kmeans(kmeans_fit(&x, k, seed)?)
        }
        Algorithm::Dbscan => {
            let eps = args.eps.or(file.eps).unwrap_or(0.5);
            let min_pts = args.min_pts.map(|m| m as usize).or(file.min_pts).unwrap_or(5);
            if !(eps > 0.0) || min_pts == 0 {
                return Err(Error::Usage("eps must be positive and min-pts at least 1".into()));
            }
            settings.eps = Some(eps);
            settings.min_pts = Some(min_pts);
            FittedModel::Dbscan(dbscan_fit(&x, eps, min_pts)?)
        }
    };
    Ok((encoder, model, settings))
}

fn cmd_fit(args: &FitArgs, file: &FileConfig, config: Option<&Path>) -> Result<()> {
    let seed = resolve_seed(args.model.seed, file)?;
    let ds = load_data(&args.data, file)?;
    let (encoder, model, settings) = fit_model(&ds, &args.model, file, seed)?;
    let manifest = RunManifest {
        command: "fit".into(),
        config_path: config.map(Path::to_path_buf),
        dataset_path: args.data.data.clone(),
        model_path: args.out.clone(),
        rng_seed: seed,
        search: None,
        settings: serde_json::to_value(&settings)?,
    };
    let sizes: Vec<String> = model
        .summaries()
        .iter()
        .map(|s| format!("{}:{}", s.cluster_id, s.cardinality))
        .collect();
    let noise = model.labels().iter().filter(|a| **a == Assignment::Noise).count();
    let out = ModelFile {
        dataset: ds.id.clone(),
        encoder,
        model,
        manifest,
    };
    write_out(args.out.as_deref(), &serde_json::to_string_pretty(&out)?)?;
    eprintln!(
        "{} clusters [{}], {} noise points",
        out.model.num_clusters(),
        sizes.join(", "),
        noise
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<ModelFile> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn explainer_for(ds: Dataset, model: &ModelFile) -> Result<Explainer> {
    if ds.schema.len() != model.encoder.schema.len()
        || ds
            .schema
            .features()
            .iter()
            .zip(model.encoder.schema.features())
            .any(|(a, b)| a.name != b.name)
    {
        return Err(Error::Usage("dataset columns do not match the model's encoder".into()));
    }
    let mut ds = ds;
    // the model's schema fixes Gower ranges and category domains
    ds.schema = model.encoder.schema.clone();
    Explainer::new(ds, model.encoder.clone(), model.model.clone(), &GuardParams::default())
}

fn resolve_search(flags: &SearchFlags, file: &FileConfig, seed: u64) -> SearchConfig {
    let base = file.search.clone().unwrap_or_default();
    SearchConfig {
        sy_strategy: base.sy_strategy,
        initial_samples: flags.initial_samples.unwrap_or(base.initial_samples),
        candidates_per_round: flags.candidates_per_round.unwrap_or(base.candidates_per_round),
        evaluations_per_round: flags.evaluations_per_round.unwrap_or(base.evaluations_per_round),
        max_rounds: flags.max_rounds.unwrap_or(base.max_rounds),
        time_budget: flags.time_budget.unwrap_or(base.time_budget),
        xi: flags.xi.unwrap_or(base.xi),
        surrogate_trees: flags.surrogate_trees.unwrap_or(base.surrogate_trees),
        rng_seed: seed,
        outlier_guard_enabled: base.outlier_guard_enabled && !flags.no_guard,
    }
}

fn parse_target(raw: &str) -> Result<usize> {
    raw.trim().parse().map_err(|_| {
        Error::Usage(format!(
            "target must be a cluster id, got `{raw}` (NOISE is never a valid target)"
        ))
    })
}

fn cmd_explain(args: &ExplainArgs, file: &FileConfig, config: Option<&Path>) -> Result<()> {
    let seed = resolve_seed(args.seed, file)?;
    let target = parse_target(&args.target)?;
    let model = load_model(&args.model)?;
    let ex = explainer_for(load_data(&args.data, file)?, &model)?;
    let current = ex.assignment(args.instance)?;
    if current == Assignment::Cluster(target) {
        return Err(Error::Precondition(format!(
            "instance {} is already in cluster {target}; choose another target",
            args.instance
        )));
    }
    let mut search = resolve_search(&args.search, file, seed);
    if let Some(s) = args.strategy {
        search.sy_strategy = s;
    }
    search.validate()?;
    let options = StrategyOptions {
        share: args.share.or(file.share).unwrap_or(StrategyOptions::default().share),
        ..StrategyOptions::default()
    };
    let prepared = ex.prepare(search.sy_strategy, &options)?;
    let result = ex.explain_row(args.instance, target, &prepared, &search)?;

    let manifest = RunManifest {
        command: "explain".into(),
        config_path: config.map(Path::to_path_buf),
        dataset_path: args.data.data.clone(),
        model_path: Some(args.model.clone()),
        rng_seed: seed,
        search: Some(search.clone()),
        settings: serde_json::json!({
            "instance": args.instance,
            "target": target,
            "share": (search.sy_strategy == StrategyKind::Agnostic).then_some(options.share),
            "timings": args.timings,
        }),
    };
    let report = result.report(&ex.dataset.schema, args.timings);
    let json = serde_json::to_string_pretty(&ExplainOutput {
        manifest: &manifest,
        result: &report,
    })?;

    let mut summary = format!(
        "instance {} (cluster {current}) -> cluster {target} [{}]: {} counterfactuals after {} evaluations",
        args.instance,
        search.sy_strategy,
        report.counterfactuals.len(),
        report.telemetry.evaluations
    );
    if let (Some(t1), Some(tb)) = (result.time_to_first, result.time_to_best) {
        summary.push_str(&format!(", first at {t1:.2}s, best at {tb:.2}s"));
    }
    for (i, c) in report.counterfactuals.iter().take(5).enumerate() {
        let changes: Vec<String> = c
            .changes
            .iter()
            .map(|ch| match ch.delta {
                Some(d) => format!("{} {:+.4} ({} -> {})", ch.feature, d, ch.from, ch.to),
                None => format!("{}: {} -> {}", ch.feature, ch.from, ch.to),
            })
            .collect();
        summary.push_str(&format!(
            "\n  #{} F={:.4} Sx={:.4} Sf={:.4}: {}",
            i + 1,
            c.breakdown.total,
            c.breakdown.s_x,
            c.breakdown.s_f,
            changes.join("; ")
        ));
    }
    match &args.out {
        Some(p) => {
            fs::write(p, &json)?;
            println!("{summary}");
        }
        None => {
            println!("{json}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn cmd_represent(args: &RepresentArgs, file: &FileConfig, config: Option<&Path>) -> Result<()> {
    let model = load_model(&args.model)?;
    let ex = explainer_for(load_data(&args.data, file)?, &model)?;
    let share = args.share.or(file.share).unwrap_or(0.2);
    let kernel = match args.gamma {
        Some(g) => KernelSpec::rbf(g).map_err(|e| Error::Usage(e.to_string()))?,
        None => KernelSpec::median_heuristic(&ex.encoded, StrategyOptions::default().kernel_sample),
    };
    let reps = build_representative_set(&ex.encoded, &ex.model, share, kernel)
        .map_err(|e| Error::Usage(e.to_string()))?;
    let manifest = RunManifest {
        command: "represent".into(),
        config_path: config.map(Path::to_path_buf),
        dataset_path: args.data.data.clone(),
        model_path: Some(args.model.clone()),
        rng_seed: 0,
        search: None,
        settings: serde_json::json!({ "share": share, "gamma": reps.kernel.gamma }),
    };
    write_out(
        args.out.as_deref(),
        &serde_json::to_string_pretty(&RepresentOutput {
            manifest: &manifest,
            representatives: &reps,
        })?,
    )?;
    for c in &reps.clusters {
        eprintln!(
            "cluster {} ({} points): {} prototypes, {} criticisms",
            c.cluster,
            c.cardinality,
            c.prototypes.len(),
            c.criticisms.len()
        );
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs, file: &FileConfig, config: Option<&Path>) -> Result<()> {
    let seed = resolve_seed(args.fit.seed, file)?;
    let ds = load_data(&args.data, file)?;
    let (model, fit_settings) = match &args.model {
        Some(p) => (load_model(p)?, None),
        None => {
            let (encoder, model, settings) = fit_model(&ds, &args.fit, file, seed)?;
            let mf = ModelFile {
                dataset: ds.id.clone(),
                encoder,
                model,
                manifest: RunManifest {
                    command: "fit".into(),
                    config_path: config.map(Path::to_path_buf),
                    dataset_path: args.data.data.clone(),
                    model_path: None,
                    rng_seed: seed,
                    search: None,
                    settings: serde_json::to_value(&settings)?,
                },
            };
            (mf, Some(settings))
        }
    };
    let ex = explainer_for(ds, &model)?;

    let defaults = ProtocolSpec::default();
    let spec = ProtocolSpec {
        instances_per_cluster: args
            .instances_per_cluster
            .map(|v| v as usize)
            .or(file.instances_per_cluster)
            .unwrap_or(defaults.instances_per_cluster),
        top_clusters: defaults.top_clusters,
        repeats: args.repeats.map(|v| v as usize).or(file.repeats).unwrap_or(defaults.repeats),
        strategies: if args.strategies.is_empty() {
            file.strategies.clone().unwrap_or(defaults.strategies)
        } else {
            args.strategies.clone()
        },
        shares: if args.shares.is_empty() {
            file.shares.clone().unwrap_or(defaults.shares)
        } else {
            args.shares.clone()
        },
        seed,
    };
    if spec.repeats == 0 || spec.instances_per_cluster == 0 {
        return Err(Error::Usage("repeats and instances per cluster must be at least 1".into()));
    }
    if spec.shares.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
        return Err(Error::Usage("shares must lie in (0, 1]".into()));
    }
    let search = resolve_search(&args.search, file, seed);
    search.validate()?;
    let bench = BenchConfig {
        search: search.clone(),
        options: StrategyOptions::default(),
        aggregation: if args.all_counterfactuals {
            Aggregation::AllCounterfactuals
        } else {
            file.aggregation.unwrap_or_default()
        },
        keep_reports: args.log.is_some(),
    };
    let mut report = run_benchmark(&ex, &spec, &bench)?;
    if let Some(s) = &fit_settings {
        report
            .metadata
            .notes
            .push(format!("model fitted on the fly: {}", serde_json::to_string(s)?));
    }
    if !ex.encoder.scaling.is_some() {
        report
            .metadata
            .notes
            .push("clustering used raw, unstandardised features".into());
    }

    let manifest = RunManifest {
        command: "bench".into(),
        config_path: config.map(Path::to_path_buf),
        dataset_path: args.data.data.clone(),
        model_path: args.model.clone(),
        rng_seed: seed,
        search: Some(search),
        settings: serde_json::to_value(&spec)?,
    };
    write_out(args.out.as_deref(), emit_csv(&report.rows)?.trim_end())?;
    if let Some(p) = &args.log {
        #[derive(Serialize)]
        struct Log<'a> {
            manifest: &'a RunManifest,
            #[serde(flatten)]
            report: &'a crate::evalharness::BenchmarkReport,
        }
        fs::write(
            p,
            serde_json::to_string_pretty(&Log {
                manifest: &manifest,
                report: &report,
            })?,
        )?;
    }
    eprint!("{}", format_table(&report.rows));
    Ok(())
}
