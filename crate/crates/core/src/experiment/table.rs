//! Result rows, aggregation and the CSV/JSON writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::seed::SEED_DERIVATION;
use super::spec::ExperimentSpec;
use crate::engine::RunRecord;
use crate::error::Result;

/// Version of the `results.csv`, `summary.*` and `boxplot_*.csv` layouts.
pub const SCHEMA_VERSION: u32 = 1;

pub const RESULT_COLUMNS: [&str; 10] = [
    "variant",
    "repetition",
    "seed",
    "status",
    "loglik",
    "se",
    "ari",
    "iterations",
    "data_visits",
    "truncation_events",
];
pub const TIMING_COLUMNS: [&str; 2] = ["wall_seconds", "cpu_seconds"];

/// Metrics aggregated by [`summarize`] and available to [`emit_boxplot_data`].
pub const METRICS: [&str; 5] = ["loglik", "se", "ari", "truncation_events", "wall_seconds"];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub variant: String,
    pub repetition: usize,
    /// Seed of the run's sampling stream.
    pub seed: u64,
    /// `ok` or `error: <message>`.
    pub status: String,
    pub loglik: Option<f64>,
    pub se: Option<f64>,
    pub ari: Option<f64>,
    pub iterations: usize,
    pub data_visits: usize,
    pub truncation_events: u64,
    pub wall_seconds: f64,
    pub cpu_seconds: f64,
    /// Full run output for EM variants; not written to CSV.
    pub record: Option<RunRecord>,
}

impl ResultRow {
    pub fn new(variant: String, repetition: usize) -> Self {
        Self {
            variant,
            repetition,
            seed: 0,
            status: "pending".into(),
            loglik: None,
            se: None,
            ari: None,
            iterations: 0,
            data_visits: 0,
            truncation_events: 0,
            wall_seconds: 0.0,
            cpu_seconds: 0.0,
            record: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "loglik" => self.loglik,
            "se" => self.se,
            "ari" => self.ari,
            "truncation_events" => self.is_ok().then_some(self.truncation_events as f64),
            "wall_seconds" => self.is_ok().then_some(self.wall_seconds),
            "cpu_seconds" => self.is_ok().then_some(self.cpu_seconds),
            "iterations" => self.is_ok().then_some(self.iterations as f64),
            _ => None,
        }
    }
}

/// One row per (variant, repetition), ordered by variant then repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub variants: Vec<String>,
    pub rows: Vec<ResultRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultsTable {
    pub fn rows_for(&self, variant: &str) -> impl Iterator<Item = &ResultRow> + '_ {
        let variant = variant.to_owned();
        self.rows.iter().filter(move |r| r.variant == variant)
    }

    /// Values of `metric` for `variant`, skipping failed runs.
    pub fn metric_values(&self, variant: &str, metric: &str) -> Vec<f64> {
        self.rows_for(variant).filter_map(|r| r.metric(metric)).collect()
    }

    /// CSV text. Without timing the output depends only on the seed and configuration.
    pub fn to_csv(&self, include_timing: bool) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = RESULT_COLUMNS.to_vec();
        if include_timing {
            header.extend(TIMING_COLUMNS);
        }
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.variant.clone(),
                r.repetition.to_string(),
                r.seed.to_string(),
                r.status.clone(),
                opt(r.loglik),
                opt(r.se),
                opt(r.ari),
                r.iterations.to_string(),
                r.data_visits.to_string(),
                r.truncation_events.to_string(),
            ];
            if include_timing {
                rec.push(r.wall_seconds.to_string());
                rec.push(r.cpu_seconds.to_string());
            }
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub variant: String,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    /// `sd / √count`.
    pub se: f64,
}

/// Per-variant mean, median, sample standard deviation and standard error of every metric
/// that has at least one value.
pub fn summarize(table: &ResultsTable) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for variant in &table.variants {
        for metric in METRICS {
            let values = table.metric_values(variant, metric);
            if values.is_empty() {
                continue;
            }
            let (mean, sd) = mean_sd(&values);
            out.push(SummaryRow {
                variant: variant.clone(),
                metric: metric.to_string(),
                count: values.len(),
                mean,
                median: quantile(&sorted(&values), 0.5),
                sd,
                se: sd / (values.len() as f64).sqrt(),
            });
        }
    }
    out
}

/// Mean and sample standard deviation (divisor `n - 1`; zero for a single value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolation quantile of sorted data: position `p·(n-1)`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxplotRecord {
    pub variant: String,
    /// Lower whisker end: smallest value within `1.5·IQR` below `q1`.
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Upper whisker end: largest value within `1.5·IQR` above `q3`.
    pub max: f64,
    pub outliers: Vec<f64>,
}

pub fn boxplot(variant: &str, values: &[f64]) -> Option<BoxplotRecord> {
    if values.is_empty() {
        return None;
    }
    let s = sorted(values);
    let (q1, median, q3) = (quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = s.iter().copied().filter(|v| *v >= lo_fence && *v <= hi_fence).collect();
    Some(BoxplotRecord {
        variant: variant.to_string(),
        min: inside.first().copied().unwrap_or(q1),
        q1,
        median,
        q3,
        max: inside.last().copied().unwrap_or(q3),
        outliers: s.iter().copied().filter(|v| *v < lo_fence || *v > hi_fence).collect(),
    })
}

pub fn emit_boxplot_data(table: &ResultsTable, metric: &str) -> Vec<BoxplotRecord> {
    table
        .variants
        .iter()
        .filter_map(|v| boxplot(v, &table.metric_values(v, metric)))
        .collect()
}

pub const BOXPLOT_HEADER: &str = "# quantiles: linear interpolation at position p*(n-1) (type 7); \
     min/max are Tukey whisker ends (most extreme values within 1.5*IQR of the quartiles); \
     outliers separated by ';'";

pub fn boxplot_csv(records: &[BoxplotRecord]) -> String {
    let mut out = format!("{BOXPLOT_HEADER}\nvariant,min,q1,median,q3,max,outliers\n");
    for r in records {
        let outliers: Vec<String> = r.outliers.iter().map(f64::to_string).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.variant,
            r.min,
            r.q1,
            r.median,
            r.q3,
            r.max,
            outliers.join(";")
        )
        .expect("write to String");
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Writes `results.csv`, `summary.csv`, `summary.json`, `boxplot_<metric>.csv` and `meta.json`.
/// `results.csv` carries the timing columns; `results_notiming.csv` omits them.
pub fn write_outputs(dir: &Path, spec: &ExperimentSpec, table: &ResultsTable) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), table.to_csv(true)?)?;
    fs::write(dir.join("results_notiming.csv"), table.to_csv(false)?)?;
    let summary = summarize(table);
    fs::write(dir.join("summary.csv"), summary_csv(&summary)?)?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    for metric in METRICS {
        let records = emit_boxplot_data(table, metric);
        if !records.is_empty() {
            fs::write(dir.join(format!("boxplot_{metric}.csv")), boxplot_csv(&records))?;
        }
    }
    let seeds: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|r| serde_json::json!({"variant": r.variant, "repetition": r.repetition, "seed": r.seed}))
        .collect();
    let meta = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "package_version": env!("CARGO_PKG_VERSION"),
        "master_seed": spec.seed,
        "seed_derivation": SEED_DERIVATION,
        "rng": "ChaCha8",
        "timing_columns": TIMING_COLUMNS,
        "config": spec,
        "run_seeds": seeds,
    });
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}
