use std::collections::BTreeSet;
use std::path::Path;

use super::{Dataset, FeatureSchema, FeatureSpec, FeatureValue, Instance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Columns forced to categorical even when every value parses as a number.
    pub categorical_hints: BTreeSet<String>,
}

impl CsvOptions {
    pub fn with_header() -> Self {
        Self {
            has_header: true,
            ..Self::default()
        }
    }
}

/// Reads a comma-separated table and infers its schema.
///
/// A column is numeric iff every cell parses as a real and the column is not
/// listed in `categorical_hints`. Ranges and domains come from the data.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let format_err = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;

    let mut records = reader.records();
    let mut names: Option<Vec<String>> = None;
    if options.has_header {
        match records.next() {
            Some(header) => names = Some(header?.iter().map(str::to_string).collect()),
            None => return Err(format_err("empty file".into())),
        }
    }

    let mut cells: Vec<Vec<String>> = Vec::new();
    for (line, record) in records.enumerate() {
        let record = record?;
        let row: Vec<String> = record.iter().map(str::to_string).collect();
        let expected = names
            .as_ref()
            .map(Vec::len)
            .or_else(|| cells.first().map(Vec::len))
            .unwrap_or(row.len());
        let line_no = line + 1 + usize::from(options.has_header);
        if row.len() != expected {
            return Err(format_err(format!(
                "line {line_no}: expected {expected} cells, found {}",
                row.len()
            )));
        }
        if let Some(col) = row.iter().position(String::is_empty) {
            return Err(format_err(format!("line {line_no}: missing cell in column {col}")));
        }
        cells.push(row);
    }
    if cells.is_empty() {
        return Err(format_err("no data rows".into()));
    }

    let width = cells[0].len();
    let names = names.unwrap_or_else(|| (0..width).map(|j| format!("x{j}")).collect());

    let mut features = Vec::with_capacity(width);
    let mut numeric_cols: Vec<Option<Vec<f64>>> = Vec::with_capacity(width);
    for (j, name) in names.iter().enumerate() {
        let parsed: Option<Vec<f64>> = if options.categorical_hints.contains(name) {
            None
        } else {
            cells
                .iter()
                .map(|r| r[j].parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect()
        };
        match &parsed {
            Some(values) => {
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                features.push(FeatureSpec::numeric(name.clone(), min, max));
            }
            None => {
                let domain: BTreeSet<&str> = cells.iter().map(|r| r[j].as_str()).collect();
                features.push(FeatureSpec::categorical(name.clone(), domain));
            }
        }
        numeric_cols.push(parsed);
    }
    let schema = FeatureSchema::new(features).map_err(|e| format_err(e.to_string()))?;

    let rows = cells
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let values = row
                .into_iter()
                .enumerate()
                .map(|(j, cell)| match &numeric_cols[j] {
                    Some(col) => FeatureValue::Num(col[i]),
                    None => FeatureValue::Cat(cell),
                })
                .collect();
            Instance::new(values)
        })
        .collect();

    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(id, schema, rows)
}
