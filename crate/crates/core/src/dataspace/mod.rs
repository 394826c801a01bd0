//! Tabular data: feature schema, instances, CSV ingestion, Gower distance
//! and the numeric encoding shared by the clustering models and the search
//! surrogate.

mod csv_io;
mod encode;
mod gower;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

pub use csv_io::{load_csv, CsvOptions};
pub use encode::{standardize, Encoder, NumericScale, ScalingParams};
pub use gower::{feature_dissimilarity, gower_distance};

/// Type and observed range of a single column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric { min: f64, max: f64 },
    /// Domain is kept sorted so that one-hot layouts are stable.
    Categorical { domain: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>, min: f64, max: f64) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Numeric { min, max },
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        domain: impl IntoIterator<Item = S>,
    ) -> Self {
        let mut domain: Vec<String> = domain.into_iter().map(Into::into).collect();
        domain.sort();
        domain.dedup();
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical { domain },
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, FeatureKind::Numeric { .. })
    }
}

/// Ordered description of every column of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureSpec>", into = "Vec<FeatureSpec>")]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &features {
            if !seen.insert(f.name.as_str()) {
                return Err(contract(format!("duplicate feature name `{}`", f.name)));
            }
            match &f.kind {
                FeatureKind::Numeric { min, max } => {
                    if !(min <= max) {
                        return Err(contract(format!(
                            "feature `{}` has min {min} > max {max}",
                            f.name
                        )));
                    }
                }
                FeatureKind::Categorical { domain } => {
                    if domain.is_empty() {
                        return Err(contract(format!(
                            "categorical feature `{}` has an empty domain",
                            f.name
                        )));
                    }
                }
            }
        }
        Ok(Self { features })
    }

    /// All-numeric schema whose ranges bracket the given rows.
    pub fn infer_numeric(names: &[String], rows: &[Vec<f64>]) -> Result<Self> {
        let d = names.len();
        let mut features = Vec::with_capacity(d);
        for (j, name) in names.iter().enumerate() {
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for row in rows {
                if row.len() != d {
                    return Err(contract("row length differs from the number of names"));
                }
                min = min.min(row[j]);
                max = max.max(row[j]);
            }
            if rows.is_empty() {
                min = 0.0;
                max = 0.0;
            }
            features.push(FeatureSpec::numeric(name.clone(), min, max));
        }
        Self::new(features)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn get(&self, i: usize) -> &FeatureSpec {
        &self.features[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Checks length, per-feature type, and categorical domain membership.
    pub fn check(&self, instance: &Instance) -> Result<()> {
        if instance.len() != self.len() {
            return Err(contract(format!(
                "instance has {} values, schema has {} features",
                instance.len(),
                self.len()
            )));
        }
        for (spec, value) in self.features.iter().zip(&instance.values) {
            match (&spec.kind, value) {
                (FeatureKind::Numeric { .. }, FeatureValue::Num(_)) => {}
                (FeatureKind::Categorical { domain }, FeatureValue::Cat(c)) => {
                    if domain.binary_search(c).is_err() {
                        return Err(contract(format!(
                            "value `{c}` outside the domain of `{}`",
                            spec.name
                        )));
                    }
                }
                _ => {
                    return Err(contract(format!(
                        "value kind does not match feature `{}`",
                        spec.name
                    )))
                }
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<FeatureSpec>> for FeatureSchema {
    type Error = crate::Error;

    fn try_from(features: Vec<FeatureSpec>) -> Result<Self> {
        Self::new(features)
    }
}

impl From<FeatureSchema> for Vec<FeatureSpec> {
    fn from(schema: FeatureSchema) -> Self {
        schema.features
    }
}

/// A single cell: a real for numeric columns, a token for categorical ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Num(f64),
    Cat(String),
}

impl FeatureValue {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            FeatureValue::Num(v) => Some(*v),
            FeatureValue::Cat(_) => None,
        }
    }

    /// Bitwise equality for numerics, so that copied values always compare
    /// equal and any resampled value never does by accident of rounding.
    pub fn same_as(&self, other: &FeatureValue) -> bool {
        match (self, other) {
            (FeatureValue::Num(a), FeatureValue::Num(b)) => a.to_bits() == b.to_bits() || a == b,
            (FeatureValue::Cat(a), FeatureValue::Cat(b)) => a == b,
            _ => false,
        }
    }
}

impl std::fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureValue::Num(v) => write!(f, "{v}"),
            FeatureValue::Cat(c) => f.write_str(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Instance {
    pub values: Vec<FeatureValue>,
}

impl Instance {
    pub fn new(values: Vec<FeatureValue>) -> Self {
        Self { values }
    }

    pub fn numeric(values: &[f64]) -> Self {
        Self {
            values: values.iter().copied().map(FeatureValue::Num).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices of the features whose values differ from `other`.
    pub fn changed_features(&self, other: &Instance) -> Vec<usize> {
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .filter(|(_, (a, b))| !a.same_as(b))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub id: String,
    pub schema: FeatureSchema,
    pub rows: Vec<Instance>,
}

impl Dataset {
    pub fn new(id: impl Into<String>, schema: FeatureSchema, rows: Vec<Instance>) -> Result<Self> {
        for row in &rows {
            schema.check(row)?;
        }
        Ok(Self {
            id: id.into(),
            schema,
            rows,
        })
    }

    /// All-numeric dataset with ranges inferred from `rows`.
    pub fn from_numeric(id: impl Into<String>, names: &[&str], rows: &[Vec<f64>]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let schema = FeatureSchema::infer_numeric(&names, rows)?;
        let rows = rows.iter().map(|r| Instance::numeric(r)).collect();
        Self::new(id, schema, rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}
