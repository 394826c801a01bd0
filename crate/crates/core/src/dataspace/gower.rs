use super::{FeatureKind, FeatureSchema, FeatureSpec, FeatureValue, Instance};
use crate::error::{contract, Result};

/// Per-feature Gower dissimilarity in `[0, 1]`.
///
/// Numeric: `|a - b| / (max - min)` clamped to 1, and 0 for a constant
/// training column. Categorical: 0 on equality, else 1.
pub fn feature_dissimilarity(spec: &FeatureSpec, a: &FeatureValue, b: &FeatureValue) -> Result<f64> {
    match (&spec.kind, a, b) {
        (FeatureKind::Numeric { min, max }, FeatureValue::Num(x), FeatureValue::Num(y)) => {
            let range = max - min;
            if range <= 0.0 {
                Ok(0.0)
            } else {
                Ok(((x - y).abs() / range).min(1.0))
            }
        }
        (FeatureKind::Categorical { .. }, FeatureValue::Cat(x), FeatureValue::Cat(y)) => {
            Ok(if x == y { 0.0 } else { 1.0 })
        }
        _ => Err(contract(format!(
            "value kinds do not match feature `{}`",
            spec.name
        ))),
    }
}

/// Mean per-feature dissimilarity between two instances of `schema`.
///
/// Ranges are those frozen in the schema; values outside them saturate at 1.
pub fn gower_distance(a: &Instance, b: &Instance, schema: &FeatureSchema) -> Result<f64> {
    if a.len() != schema.len() || b.len() != schema.len() {
        return Err(contract("instance length does not match schema"));
    }
    if schema.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for ((spec, x), y) in schema.features().iter().zip(&a.values).zip(&b.values) {
        total += feature_dissimilarity(spec, x, y)?;
    }
    Ok(total / schema.len() as f64)
}
