use super::idx::IdxImageSet;
use crate::data::Dataset;

/// Removes the columns whose value is the same in every row. Returns the reduced data and
/// the strictly increasing list of kept column indices.
pub fn drop_constant_columns(data: &Dataset) -> (Dataset, Vec<usize>) {
    let d = data.dim();
    if data.is_empty() {
        return (data.clone(), (0..d).collect());
    }
    let first = data.row(0);
    let mut varies = vec![false; d];
    for row in data.rows().skip(1) {
        for ((v, &x), &x0) in varies.iter_mut().zip(row).zip(first) {
            *v |= x != x0;
        }
    }
    let kept: Vec<usize> = (0..d).filter(|&j| varies[j]).collect();
    let mut values = Vec::with_capacity(data.n() * kept.len());
    for row in data.rows() {
        values.extend(kept.iter().map(|&j| row[j]));
    }
    let reduced = if kept.is_empty() {
        Dataset::from_row_major(0, 1, Vec::new()).expect("empty")
    } else {
        Dataset::from_row_major(data.n(), kept.len(), values).expect("shape preserved")
    };
    (reduced, kept)
}

/// [`drop_constant_columns`] on raw pixels, without materializing the full-width matrix.
pub fn drop_constant_pixels(set: &IdxImageSet) -> (Dataset, Vec<usize>) {
    let d = set.rows * set.cols;
    let mut varies = vec![false; d];
    if set.n > 0 {
        let first = set.image(0);
        for i in 1..set.n {
            for ((v, &x), &x0) in varies.iter_mut().zip(set.image(i)).zip(first) {
                *v |= x != x0;
            }
        }
    }
    let kept: Vec<usize> = (0..d).filter(|&j| varies[j]).collect();
    let mut values = Vec::with_capacity(set.n * kept.len());
    for i in 0..set.n {
        let img = set.image(i);
        values.extend(kept.iter().map(|&j| img[j] as f64));
    }
    let reduced = Dataset::from_row_major(set.n, kept.len().max(1), values)
        .unwrap_or_else(|_| Dataset::from_row_major(0, 1, Vec::new()).expect("empty"));
    (reduced, kept)
}
