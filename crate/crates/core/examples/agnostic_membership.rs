//! The model-agnostic strategy: a tree ensemble self-trained from
//! representatives of each cluster yields soft membership probabilities,
//! whose target component becomes S_y.
//!
//! ```text
//! cargo run --release --example agnostic_membership
//! ```

use clustercf::clustering::{kmeans_fit, ClusterModel, FittedModel};
use clustercf::dataspace::{load_csv, CsvOptions, Encoder};
use clustercf::search::{prepare_agnostic, StrategyOptions};

fn main() -> clustercf::Result<()> {
    let data = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/wine.csv"), &CsvOptions::with_header())?;
    let encoder = Encoder::fit(&data, true);
    let x = encoder.encode_all(&data.rows)?;
    let model = FittedModel::Kmeans(kmeans_fit(&x, 3, 0)?);

    let (reps, membership) = prepare_agnostic(&x, &model, &StrategyOptions::default())?;
    println!("{} labelled representatives", reps.len());
    println!("pseudo-labels added per round: {:?}", membership.pseudo_label_log);

    let mut agree = 0;
    for (row, label) in x.iter().zip(model.labels()) {
        let p = membership.membership_probabilities(row)?;
        let top = (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b });
        agree += usize::from(label.cluster() == Some(membership.base.classes[top]));
    }
    println!("agreement with k-means on training rows: {agree}/{}", x.len());

    for row in [0, 60, 130] {
        let p = membership.membership_probabilities(&x[row])?;
        let shown: Vec<String> = p.iter().map(|v| format!("{v:.2}")).collect();
        println!("row {row:>3}: k-means {:?}, membership [{}]", model.assign(&x[row])?, shown.join(", "));
    }
    Ok(())
}
