use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::dataspace::{FeatureKind, FeatureSchema, FeatureValue, Instance};

/// Features that can take a value different from any given one.
pub(crate) fn mutable_features(schema: &FeatureSchema) -> Vec<usize> {
    schema
        .features()
        .iter()
        .enumerate()
        .filter(|(_, f)| match &f.kind {
            FeatureKind::Numeric { min, max } => max > min,
            FeatureKind::Categorical { domain } => domain.len() > 1,
        })
        .map(|(i, _)| i)
        .collect()
}

/// Random perturbations of `origin`.
///
/// Each candidate changes a feature subset whose size is uniform over
/// `1..=d` and whose members are uniform among subsets of that size.
/// Changed numerics are redrawn uniformly within the training range,
/// changed categoricals uniformly among the other domain values. Untouched
/// features are copied verbatim. Features that cannot change (constant
/// columns, single-value domains) are never selected, so `d` counts only
/// the mutable ones; with none, the result is empty.
pub fn sample_candidates(
    origin: &Instance,
    schema: &FeatureSchema,
    n: usize,
    rng: &mut impl Rng,
) -> Vec<Instance> {
    let mutable = mutable_features(schema);
    if mutable.is_empty() {
        return Vec::new();
    }
    (0..n)
        .map(|_| {
            let size = rng.random_range(1..=mutable.len());
            let mut cand = origin.clone();
            for pick in sample_indices(rng, mutable.len(), size) {
                let j = mutable[pick];
                cand.values[j] = resample(&schema.get(j).kind, &origin.values[j], rng);
            }
            cand
        })
        .collect()
}

fn resample(kind: &FeatureKind, current: &FeatureValue, rng: &mut impl Rng) -> FeatureValue {
    match kind {
        FeatureKind::Numeric { min, max } => loop {
            let v = rng.random_range(*min..=*max);
            if current.as_num() != Some(v) {
                return FeatureValue::Num(v);
            }
        },
        FeatureKind::Categorical { domain } => {
            let others: Vec<&String> = domain
                .iter()
                .filter(|c| !matches!(current, FeatureValue::Cat(x) if x == *c))
                .collect();
            FeatureValue::Cat(others[rng.random_range(0..others.len())].clone())
        }
    }
}
