//! Scores one hand-made candidate against an origin on a mixed
//! numeric/categorical schema: Gower distance, S_f, S_x, the
//! centroid-distance S_y and their product.
//!
//! ```text
//! cargo run --example gower_and_scoring
//! ```

use clustercf::clustering::{ClusterSummary, Metric};
use clustercf::dataspace::{gower_distance, FeatureSchema, FeatureSpec, FeatureValue, Instance};
use clustercf::scoring::{score_f, score_x, sy_centroid_distance, ScoreBreakdown};

fn main() -> clustercf::Result<()> {
    let schema = FeatureSchema::new(vec![
        FeatureSpec::numeric("age", 18.0, 90.0),
        FeatureSpec::numeric("income", 0.0, 200_000.0),
        FeatureSpec::categorical("contract", ["monthly", "yearly", "two-year"]),
    ])?;
    let origin = Instance::new(vec![
        FeatureValue::Num(42.0),
        FeatureValue::Num(55_000.0),
        FeatureValue::Cat("monthly".into()),
    ]);
    let candidate = Instance::new(vec![
        FeatureValue::Num(42.0),
        FeatureValue::Num(61_000.0),
        FeatureValue::Cat("yearly".into()),
    ]);

    let d = gower_distance(&origin, &candidate, &schema)?;
    println!("gower distance      {d:.4}");
    println!("changed features    {:?}", candidate.changed_features(&origin));

    // a target cluster summarised in some 2-d model space
    let target = ClusterSummary {
        cluster_id: 1,
        centroid: vec![1.0, 1.0],
        min_dist: 0.1,
        max_dist: 1.5,
        cardinality: 40,
    };
    let encoded_candidate = [0.6, 0.8];
    let b = ScoreBreakdown::new(
        score_f(&candidate, &origin),
        score_x(&candidate, &origin, &schema)?,
        sy_centroid_distance(&encoded_candidate, &target, Metric::Euclidean),
    );
    println!("S_f {:.4}  S_x {:.4}  S_y {:.4}  F {:.4}", b.s_f, b.s_x, b.s_y, b.total);
    Ok(())
}
