//! Row-major observation matrix.

use crate::error::{Error, Result};

/// An `n × d` matrix of observations stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    dim: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn from_row_major(n: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dataset dimension must be at least 1"));
        }
        if values.len() != n * dim {
            return Err(Error::invalid(format!(
                "expected {} values for a {n}x{dim} dataset, got {}",
                n * dim,
                values.len()
            )));
        }
        Ok(Self { n, dim, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::invalid("dataset needs at least one row"))?;
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has {} columns, expected {dim}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), dim, values)
    }

    /// One-dimensional data set from scalar observations.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_row_major(values.len(), 1, values.to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Gathers the given rows (repetitions allowed) into a new data set.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            n: indices.len(),
            dim: self.dim,
            values,
        }
    }

    /// Refills `self` with the selected rows of `source`, reusing the allocation.
    pub fn gather_from(&mut self, source: &Dataset, indices: &[usize]) {
        self.values.clear();
        self.dim = source.dim;
        self.n = indices.len();
        for &i in indices {
            self.values.extend_from_slice(source.row(i));
        }
    }

    /// Contiguous block of rows `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            n: end - start,
            dim: self.dim,
            values: self.values[start * self.dim..end * self.dim].to_vec(),
        }
    }

    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.dim != other.dim {
            return Err(Error::invalid("cannot concatenate data sets of different dimension"));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Dataset {
            n: self.n + other.n,
            dim: self.dim,
            values,
        })
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for row in self.rows() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.n as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos / self.dim,
                pos % self.dim
            ))),
            None => Ok(()),
        }
    }
}
