//! DBSCAN on two synthetic blobs: a point of the left blob is explained
//! towards the right one. Density models have no centroid, so the distance
//! strategy falls back to the member mean of the target cluster.
//!
//! ```text
//! cargo run --release --example dbscan_counterfactual
//! ```

use clustercf::clustering::{dbscan_fit, Assignment, ClusterModel, FittedModel};
use clustercf::dataspace::{Dataset, Encoder};
use clustercf::search::{Explainer, GuardParams, PreparedStrategy, SearchConfig};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

fn main() -> clustercf::Result<()> {
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut rows = Vec::new();
    for centre in [[0.0, 0.0, 0.0], [4.0, 4.0, 0.0]] {
        for _ in 0..80 {
            rows.push(centre.iter().map(|c| c + 0.6 * r.sample::<f64, _>(StandardNormal)).collect::<Vec<f64>>());
        }
    }
    let data = Dataset::from_numeric("blobs", &["a", "b", "c"], &rows)?;
    let encoder = Encoder::fit(&data, true);
    let x = encoder.encode_all(&data.rows)?;
    let model = FittedModel::Dbscan(dbscan_fit(&x, 0.6, 5)?);
    let noise = model.labels().iter().filter(|l| **l == Assignment::Noise).count();
    println!("{} clusters, {noise} noise points", model.num_clusters());

    let explainer = Explainer::new(data, encoder, model, &GuardParams::default())?;
    let source = explainer.assignment(0)?.cluster().expect("row 0 is a core member");
    // any cluster found among the right blob's rows
    let target = (80..rows.len())
        .filter_map(|i| explainer.assignment(i).ok()?.cluster())
        .find(|&c| c != source)
        .expect("the right blob forms a cluster");
    println!("explaining row 0 (cluster {source}) towards cluster {target}");

    let config = SearchConfig {
        max_rounds: 15,
        ..SearchConfig::default()
    };
    for strategy in [PreparedStrategy::Hard, PreparedStrategy::Distance] {
        let res = explainer.explain_row(0, target, &strategy, &config)?;
        match res.best() {
            Some(best) => println!(
                "{:<8} {} counterfactuals, best F {:.3} (S_f {:.2}, S_x {:.3}), first at evaluation {}",
                strategy.kind().as_str(),
                res.counterfactuals.len(),
                best.breakdown.total,
                best.breakdown.s_f,
                best.breakdown.s_x,
                res.first_evaluation().unwrap_or_default()
            ),
            None => println!("{:<8} nothing found in {} evaluations", strategy.kind().as_str(), res.evaluations),
        }
    }
    Ok(())
}
