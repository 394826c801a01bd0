//! Agnostic strategy on Wine with 20%, 10% and 5% of each cluster as
//! representatives. The default protocol is trimmed (two instances per
//! cluster, one repeat) to keep the example short; pass `--full` for the
//! complete one.
//!
//! ```text
//! cargo run --release --example share_ablation [-- --full]
//! ```

use clustercf::clustering::{kmeans_fit, FittedModel};
use clustercf::dataspace::{load_csv, CsvOptions, Encoder};
use clustercf::evalharness::{emit_csv, format_table, run_benchmark, BenchConfig, ProtocolSpec};
use clustercf::search::{Explainer, GuardParams, StrategyKind};

fn main() -> clustercf::Result<()> {
    let full = std::env::args().any(|a| a == "--full");
    let data = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/wine.csv"), &CsvOptions::with_header())?;
    let encoder = Encoder::fit(&data, true);
    let x = encoder.encode_all(&data.rows)?;
    let model = FittedModel::Kmeans(kmeans_fit(&x, 3, 0)?);
    let explainer = Explainer::new(data, encoder, model, &GuardParams::default())?;

    let mut spec = ProtocolSpec {
        strategies: vec![StrategyKind::Agnostic],
        shares: vec![0.2, 0.1, 0.05],
        ..ProtocolSpec::default()
    };
    if !full {
        spec.instances_per_cluster = 2;
        spec.repeats = 1;
    }
    let report = run_benchmark(&explainer, &spec, &BenchConfig::default())?;
    print!("{}", format_table(&report.rows));
    println!();
    print!("{}", emit_csv(&report.rows)?);
    Ok(())
}
