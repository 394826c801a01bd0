use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureKind, FeatureSchema, FeatureValue, Instance};
use crate::error::{contract, Result};
use crate::util::mean_std;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericScale {
    pub mean: f64,
    pub std: f64,
}

impl NumericScale {
    pub fn forward(&self, x: f64) -> f64 {
        if self.std > 0.0 {
            (x - self.mean) / self.std
        } else {
            0.0
        }
    }

    pub fn inverse(&self, z: f64) -> f64 {
        if self.std > 0.0 {
            z * self.std + self.mean
        } else {
            self.mean
        }
    }
}

/// Per-feature mean and population standard deviation of the numeric
/// columns, serialised as `{feature_name: {mean, std}}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalingParams {
    pub scales: BTreeMap<String, NumericScale>,
}

impl ScalingParams {
    pub fn fit(dataset: &Dataset) -> Self {
        let mut scales = BTreeMap::new();
        for (j, spec) in dataset.schema.features().iter().enumerate() {
            if !spec.is_numeric() {
                continue;
            }
            let column: Vec<f64> = dataset
                .rows
                .iter()
                .filter_map(|r| r.values[j].as_num())
                .collect();
            let (mean, std) = mean_std(&column).unwrap_or((0.0, 0.0));
            scales.insert(spec.name.clone(), NumericScale { mean, std });
        }
        Self { scales }
    }

    pub fn get(&self, name: &str) -> Option<&NumericScale> {
        self.scales.get(name)
    }

    fn map(&self, dataset: &Dataset, f: impl Fn(&NumericScale, f64) -> f64) -> Dataset {
        let names: Vec<&str> = dataset.schema.features().iter().map(|s| s.name.as_str()).collect();
        let rows: Vec<Instance> = dataset
            .rows
            .iter()
            .map(|row| {
                Instance::new(
                    row.values
                        .iter()
                        .zip(&names)
                        .map(|(v, name)| match (v, self.get(name)) {
                            (FeatureValue::Num(x), Some(s)) => FeatureValue::Num(f(s, *x)),
                            _ => v.clone(),
                        })
                        .collect(),
                )
            })
            .collect();
        let schema = FeatureSchema::infer_like(&dataset.schema, &rows);
        Dataset {
            id: dataset.id.clone(),
            schema,
            rows,
        }
    }

    pub fn transform(&self, dataset: &Dataset) -> Dataset {
        self.map(dataset, |s, x| s.forward(x))
    }

    pub fn inverse(&self, dataset: &Dataset) -> Dataset {
        self.map(dataset, |s, z| s.inverse(z))
    }
}

impl FeatureSchema {
    /// Same feature kinds as `template`, numeric ranges recomputed from `rows`.
    fn infer_like(template: &FeatureSchema, rows: &[Instance]) -> FeatureSchema {
        let features = template
            .features()
            .iter()
            .enumerate()
            .map(|(j, spec)| {
                let mut spec = spec.clone();
                if let FeatureKind::Numeric { min, max } = &mut spec.kind {
                    let vals = rows.iter().filter_map(|r| r.values[j].as_num());
                    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                    if lo <= hi {
                        *min = lo;
                        *max = hi;
                    }
                }
                spec
            })
            .collect();
        FeatureSchema { features }
    }
}

/// Maps numeric columns to zero mean and unit variance (constant columns map
/// to 0); categorical columns pass through unchanged.
pub fn standardize(dataset: &Dataset) -> (Dataset, ScalingParams) {
    let params = ScalingParams::fit(dataset);
    (params.transform(dataset), params)
}

/// Numeric representation of an instance used by the clustering models and
/// the search surrogate: (optionally standardised) numerics followed in
/// schema order by one-hot blocks for categoricals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub schema: FeatureSchema,
    /// `None` leaves numeric values in their original units.
    pub scaling: Option<ScalingParams>,
}

impl Encoder {
    pub fn fit(dataset: &Dataset, standardize: bool) -> Self {
        Self {
            schema: dataset.schema.clone(),
            scaling: standardize.then(|| ScalingParams::fit(dataset)),
        }
    }

    pub fn dim(&self) -> usize {
        self.schema
            .features()
            .iter()
            .map(|f| match &f.kind {
                FeatureKind::Numeric { .. } => 1,
                FeatureKind::Categorical { domain } => domain.len(),
            })
            .sum()
    }

    pub fn encode(&self, instance: &Instance) -> Result<Vec<f64>> {
        if instance.len() != self.schema.len() {
            return Err(contract(format!(
                "instance has {} values, encoder expects {}",
                instance.len(),
                self.schema.len()
            )));
        }
        let mut out = Vec::with_capacity(self.dim());
        for (spec, value) in self.schema.features().iter().zip(&instance.values) {
            match (&spec.kind, value) {
                (FeatureKind::Numeric { .. }, FeatureValue::Num(x)) => {
                    let scale = self.scaling.as_ref().and_then(|s| s.get(&spec.name));
                    out.push(scale.map_or(*x, |s| s.forward(*x)));
                }
                (FeatureKind::Categorical { domain }, FeatureValue::Cat(c)) => {
                    let hot = domain.binary_search(c).ok();
                    out.extend((0..domain.len()).map(|k| if Some(k) == hot { 1.0 } else { 0.0 }));
                }
                _ => {
                    return Err(contract(format!(
                        "value kind does not match feature `{}`",
                        spec.name
                    )))
                }
            }
        }
        Ok(out)
    }

    pub fn encode_all(&self, rows: &[Instance]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.encode(r)).collect()
    }

    /// Maps an encoded vector back to an instance: numerics are
    /// inverse-scaled, each one-hot block resolves to its arg-max category.
    pub fn decode(&self, encoded: &[f64]) -> Result<Instance> {
        if encoded.len() != self.dim() {
            return Err(contract("encoded vector has the wrong dimension"));
        }
        let mut values = Vec::with_capacity(self.schema.len());
        let mut pos = 0;
        for spec in self.schema.features() {
            match &spec.kind {
                FeatureKind::Numeric { .. } => {
                    let scale = self.scaling.as_ref().and_then(|s| s.get(&spec.name));
                    let z = encoded[pos];
                    values.push(FeatureValue::Num(scale.map_or(z, |s| s.inverse(z))));
                    pos += 1;
                }
                FeatureKind::Categorical { domain } => {
                    let block = &encoded[pos..pos + domain.len()];
                    let best = block
                        .iter()
                        .enumerate()
                        .fold(0, |best, (k, v)| if *v > block[best] { k } else { best });
                    values.push(FeatureValue::Cat(domain[best].clone()));
                    pos += domain.len();
                }
            }
        }
        Ok(Instance::new(values))
    }
}
