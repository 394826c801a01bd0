//! Explains one Wine instance under k-means (k = 3, standardised features):
//! which feature changes move it into another cluster. Prints the JSON
//! report of the best counterfactuals.
//!
//! ```text
//! cargo run --release --example kmeans_counterfactual -- [row] [hard|distance|agnostic]
//! ```

use clustercf::clustering::{kmeans_fit, Assignment, ClusterModel, FittedModel};
use clustercf::dataspace::{load_csv, CsvOptions, Encoder};
use clustercf::search::{Explainer, GuardParams, SearchConfig, StrategyKind, StrategyOptions};

fn main() -> clustercf::Result<()> {
    let mut args = std::env::args().skip(1);
    let row: usize = args.next().map_or(Ok(0), |s| s.parse()).expect("row must be an integer");
    let kind: StrategyKind = args.next().as_deref().unwrap_or("distance").parse()?;

    let data = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/wine.csv"), &CsvOptions::with_header())?;
    let encoder = Encoder::fit(&data, true);
    let x = encoder.encode_all(&data.rows)?;
    let model = FittedModel::Kmeans(kmeans_fit(&x, 3, 0)?);
    let explainer = Explainer::new(data, encoder, model, &GuardParams::default())?;

    let Assignment::Cluster(source) = explainer.assignment(row)? else {
        unreachable!("k-means assigns every point")
    };
    let target = (source + 1) % explainer.model.num_clusters();
    println!("row {row}: cluster {source} -> {target} with the {kind} strategy");

    let strategy = explainer.prepare(kind, &StrategyOptions::default())?;
    let config = SearchConfig {
        max_rounds: 20,
        ..SearchConfig::default()
    };
    let result = explainer.explain_row(row, target, &strategy, &config)?;
    let mut report = result.report(&explainer.dataset.schema, true);
    report.counterfactuals.truncate(3);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
