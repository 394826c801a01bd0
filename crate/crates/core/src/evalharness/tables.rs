use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{BenchRow, MeanStd};
use crate::error::Result;

pub const CSV_HEADER: [&str; 15] = [
    "dataset",
    "model",
    "strategy",
    "share",
    "exp_pct",
    "score_x_mean",
    "score_x_std",
    "score_f_mean",
    "score_f_std",
    "t_first_mean",
    "t_first_std",
    "t_best_mean",
    "t_best_std",
    "cf_count_mean",
    "cf_count_std",
];

/// One CSV line. Empty cells stand for "no successful run".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub dataset: String,
    pub model: String,
    pub strategy: String,
    pub share: Option<f64>,
    pub exp_pct: f64,
    pub score_x_mean: Option<f64>,
    pub score_x_std: Option<f64>,
    pub score_f_mean: Option<f64>,
    pub score_f_std: Option<f64>,
    pub t_first_mean: Option<f64>,
    pub t_first_std: Option<f64>,
    pub t_best_mean: Option<f64>,
    pub t_best_std: Option<f64>,
    pub cf_count_mean: Option<f64>,
    pub cf_count_std: Option<f64>,
}

impl From<&BenchRow> for TableRow {
    fn from(r: &BenchRow) -> Self {
        let m = &r.metrics;
        let split = |v: Option<MeanStd>| (v.map(|v| v.mean), v.map(|v| v.std));
        let (score_x_mean, score_x_std) = split(m.score_x);
        let (score_f_mean, score_f_std) = split(m.score_f);
        let (t_first_mean, t_first_std) = split(m.time_to_first);
        let (t_best_mean, t_best_std) = split(m.time_to_best);
        let (cf_count_mean, cf_count_std) = split(m.cf_count);
        Self {
            dataset: r.dataset.clone(),
            model: r.model.clone(),
            strategy: r.strategy.clone(),
            share: r.share,
            exp_pct: m.exp_pct,
            score_x_mean,
            score_x_std,
            score_f_mean,
            score_f_std,
            t_first_mean,
            t_first_std,
            t_best_mean,
            t_best_std,
            cf_count_mean,
            cf_count_std,
        }
    }
}

/// CSV with a fixed column order; header only when `rows` is empty.
pub fn emit_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(TableRow::from(r))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn parse_csv(text: &str) -> Result<Vec<TableRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows = r.deserialize().collect::<std::result::Result<Vec<TableRow>, _>>()?;
    Ok(rows)
}

fn cell(v: Option<MeanStd>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{:.digits$} ({:.digits$})", v.mean, v.std))
}

/// Plain-text rendering, one line per row, mean (std) per metric.
pub fn format_table(rows: &[BenchRow]) -> String {
    let header = [
        "dataset", "model", "strategy", "share", "Exp%", "Score x", "Score f", "t first [s]", "t best [s]", "#CF",
    ];
    let body: Vec<[String; 10]> = rows
        .iter()
        .map(|r| {
            let m = &r.metrics;
            [
                r.dataset.clone(),
                r.model.clone(),
                r.strategy.clone(),
                r.share.map_or_else(|| "-".into(), |s| format!("{:.0}%", 100.0 * s)),
                format!("{:.0}", m.exp_pct),
                cell(m.score_x, 2),
                cell(m.score_f, 2),
                cell(m.time_to_first, 2),
                cell(m.time_to_best, 2),
                cell(m.cf_count, 1),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for line in &body {
        for (w, c) in widths.iter_mut().zip(line) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut emit = |cells: Vec<&str>| {
        let line: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    };
    emit(header.to_vec());
    for line in &body {
        emit(line.iter().map(String::as_str).collect());
    }
    out
}
