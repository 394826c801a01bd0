//! Benchmark protocol on the bundled UCI Wine data: k-means++ with k = 3,
//! ten instances from the two largest clusters, three repeats each, for the
//! hard, distance and agnostic strategies.
//!
//! ```text
//! cargo run --release --example wine_benchmark            # standardised features
//! cargo run --release --example wine_benchmark -- --raw   # raw feature values
//! ```

use clustercf::clustering::{kmeans_fit, ClusterModel, FittedModel};
use clustercf::dataspace::{load_csv, CsvOptions, Encoder};
use clustercf::evalharness::{emit_csv, format_table, run_benchmark, BenchConfig, ProtocolSpec};
use clustercf::search::{Explainer, GuardParams};

fn main() -> clustercf::Result<()> {
    let raw = std::env::args().any(|a| a == "--raw");
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/wine.csv");
    let data = load_csv(path, &CsvOptions::with_header())?;
    let encoder = Encoder::fit(&data, !raw);
    let x = encoder.encode_all(&data.rows)?;
    let model = FittedModel::Kmeans(kmeans_fit(&x, 3, 0)?);
    let sizes: Vec<usize> = model.summaries().iter().map(|s| s.cardinality).collect();
    println!("cluster sizes: {sizes:?}");

    let explainer = Explainer::new(data, encoder, model, &GuardParams::default())?;
    let report = run_benchmark(&explainer, &ProtocolSpec::default(), &BenchConfig::default())?;
    print!("{}", format_table(&report.rows));
    println!();
    print!("{}", emit_csv(&report.rows)?);
    println!("wall time: {:.1}s", report.metadata.wall_seconds);
    Ok(())
}
