//! Generative templates fitted from a labeled CSV: one Gaussian per class with equal
//! mixing proportions.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mixture::{ComponentParams, MixtureParams};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub data: Dataset,
    /// Class ids remapped to `0..g` in increasing order of the original ids.
    pub labels: Vec<usize>,
    pub class_ids: Vec<i64>,
    pub feature_names: Vec<String>,
}

/// Reads a CSV with a header row, numeric feature columns and a final integer class column.
pub fn read_labeled_csv(path: &Path) -> Result<LabeledData> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::invalid("labeled CSV needs at least one feature and a class column"));
    }
    let d = headers.len() - 1;
    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |what: &str| Error::invalid(format!("{}: data row {}: {what}", path.display(), line + 1));
        for field in record.iter().take(d) {
            let v: f64 = field.trim().parse().map_err(|_| bad(&format!("non-numeric value {field:?}")))?;
            if !v.is_finite() {
                return Err(bad("non-finite value"));
            }
            values.push(v);
        }
        let class = record.get(d).ok_or_else(|| bad("missing class column"))?;
        raw_labels.push(class.trim().parse::<i64>().map_err(|_| bad(&format!("non-integer class {class:?}")))?);
    }
    let ids: BTreeMap<i64, usize> = raw_labels
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(k, id)| (id, k))
        .collect();
    Ok(LabeledData {
        data: Dataset::from_row_major(raw_labels.len(), d, values)?,
        labels: raw_labels.iter().map(|id| ids[id]).collect(),
        class_ids: ids.keys().copied().collect(),
        feature_names: headers.iter().take(d).map(str::to_string).collect(),
    })
}

/// One Gaussian per class (sample mean, sample covariance with divisor `n_z - 1`), equal weights.
pub fn fit_template(labeled: &LabeledData) -> Result<MixtureParams> {
    let g = labeled.class_ids.len();
    let d = labeled.data.dim();
    let mut components = Vec::with_capacity(g);
    for z in 0..g {
        let rows: Vec<&[f64]> = labeled
            .data
            .rows()
            .zip(&labeled.labels)
            .filter_map(|(r, &l)| (l == z).then_some(r))
            .collect();
        let nz = rows.len();
        if nz < d + 1 {
            return Err(Error::invalid(format!("class {} has {nz} rows, need at least {}", labeled.class_ids[z], d + 1)));
        }
        let mut mean = DVector::<f64>::zeros(d);
        for r in &rows {
            mean += DVector::from_column_slice(r);
        }
        mean /= nz as f64;
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for r in &rows {
            let c = DVector::from_column_slice(r) - &mean;
            cov += &c * c.transpose();
        }
        cov /= (nz - 1) as f64;
        components.push(ComponentParams::Gaussian { mean, covariance: cov });
    }
    MixtureParams::new(vec![1.0 / g as f64; g], components)
}

pub fn template_from_csv(path: &Path) -> Result<MixtureParams> {
    fit_template(&read_labeled_csv(path)?)
}
