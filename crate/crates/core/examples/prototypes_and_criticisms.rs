//! MMD-critic representatives of every Wine cluster: prototypes summarise
//! the cluster, criticisms are the points the prototypes explain worst.
//!
//! ```text
//! cargo run --release --example prototypes_and_criticisms -- [share]
//! ```

use clustercf::clustering::{kmeans_fit, FittedModel};
use clustercf::dataspace::{load_csv, CsvOptions, Encoder};
use clustercf::representatives::{build_representative_set, mmd_squared, KernelSpec};

fn main() -> clustercf::Result<()> {
    let share: f64 = std::env::args().nth(1).map_or(0.2, |s| s.parse().expect("share must be a number"));
    let data = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/wine.csv"), &CsvOptions::with_header())?;
    let encoder = Encoder::fit(&data, true);
    let x = encoder.encode_all(&data.rows)?;
    let model = FittedModel::Kmeans(kmeans_fit(&x, 3, 0)?);

    let kernel = KernelSpec::median_heuristic(&x, 500);
    println!("rbf gamma {:.4} (median heuristic)", kernel.gamma);
    let set = build_representative_set(&x, &model, share, kernel)?;
    for c in &set.clusters {
        let members: Vec<Vec<f64>> = model
            .labels()
            .iter()
            .zip(&x)
            .filter(|(l, _)| l.cluster() == Some(c.cluster))
            .map(|(_, p)| p.clone())
            .collect();
        let protos: Vec<Vec<f64>> = c.prototypes.iter().map(|&i| x[i].clone()).collect();
        println!(
            "cluster {} ({} rows): prototypes {:?}, criticisms {:?}, MMD² {:.5}",
            c.cluster,
            c.cardinality,
            c.prototypes,
            c.criticisms,
            mmd_squared(&protos, &members, &kernel)
        );
    }
    println!("{} representatives in total", set.len());
    Ok(())
}
