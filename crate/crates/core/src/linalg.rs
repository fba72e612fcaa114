//! Small numeric helpers shared across modules.

use nalgebra::{DMatrix, SymmetricEigen};

/// `log Σ exp(x_i)`, stable for large magnitudes. Returns `-inf` when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Length of the packed upper triangle of a `d × d` symmetric matrix.
#[inline]
pub const fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Index of entry `(i, j)`, `i <= j`, in the row-wise packed upper triangle.
#[inline]
pub const fn packed_index(d: usize, i: usize, j: usize) -> usize {
    i * d - i * i.saturating_sub(1) / 2 + (j - i)
}

pub fn unpack_symmetric(d: usize, packed: &[f64]) -> DMatrix<f64> {
    debug_assert_eq!(packed.len(), packed_len(d));
    let mut m = DMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            m[(i, j)] = packed[k];
            m[(j, i)] = packed[k];
            k += 1;
        }
    }
    m
}

/// Upper triangle of `m`, row-wise. `m` is assumed symmetric.
pub fn pack_symmetric(m: &DMatrix<f64>) -> Vec<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(packed_len(d));
    for i in 0..d {
        for j in i..d {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest absolute asymmetry `|m_ij - m_ji|` relative to `max(1, max |m_ij|)`.
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}
