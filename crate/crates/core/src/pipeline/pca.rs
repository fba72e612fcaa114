use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Rows per block when accumulating the scatter matrix.
const SCATTER_BLOCK: usize = 1024;

/// Principal axes of a centered data set (no variance scaling).
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `d × d_PC`, orthonormal columns ordered by decreasing eigenvalue. Each column's
    /// largest-magnitude entry is positive.
    pub components: DMatrix<f64>,
    /// All `d` sample-covariance eigenvalues, descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }

    pub fn project(&self, data: &Dataset) -> Result<Dataset> {
        project(self, data)
    }
}

/// Sample covariance with divisor `n - 1` (`n` when there is a single row).
pub fn sample_covariance(data: &Dataset, mean: &[f64]) -> DMatrix<f64> {
    let d = data.dim();
    let mut scatter = DMatrix::<f64>::zeros(d, d);
    let mut block = DMatrix::<f64>::zeros(0, d);
    let mut start = 0;
    while start < data.n() {
        let end = (start + SCATTER_BLOCK).min(data.n());
        block = block.resize_vertically(end - start, 0.0);
        for (r, i) in (start..end).enumerate() {
            for (j, (&v, &m)) in data.row(i).iter().zip(mean).enumerate() {
                block[(r, j)] = v - m;
            }
        }
        scatter.gemm_tr(1.0, &block, &block, 1.0);
        start = end;
    }
    let denom = data.n().saturating_sub(1).max(1) as f64;
    scatter /= denom;
    (&scatter + scatter.transpose()) * 0.5
}

pub fn fit_pca(data: &Dataset, n_components: usize) -> Result<PcaModel> {
    let (n, d) = (data.n(), data.dim());
    if n_components == 0 || n_components > d || d > n {
        return Err(Error::invalid(format!(
            "need 1 <= d_PC <= d <= n, got d_PC={n_components}, d={d}, n={n}"
        )));
    }
    let mean = data.column_means();
    let cov = sample_covariance(data, &mean);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut components = DMatrix::<f64>::zeros(d, n_components);
    for (k, &src) in order.iter().take(n_components).enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > col[best].abs() { i } else { best });
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        components.set_column(k, &col);
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect(),
    })
}

/// Coordinates of the centered rows on the principal axes.
pub fn project(model: &PcaModel, data: &Dataset) -> Result<Dataset> {
    let d = model.mean.len();
    if data.dim() != d {
        return Err(Error::invalid(format!("PCA model expects dimension {d}, data has {}", data.dim())));
    }
    let k = model.n_components();
    let mut out = Vec::with_capacity(data.n() * k);
    let mut centered = vec![0.0; d];
    for row in data.rows() {
        for ((c, &v), &m) in centered.iter_mut().zip(row).zip(&model.mean) {
            *c = v - m;
        }
        for j in 0..k {
            let col = model.components.column(j);
            out.push(centered.iter().zip(col.iter()).map(|(a, b)| a * b).sum());
        }
    }
    Dataset::from_row_major(data.n(), k, out)
}
