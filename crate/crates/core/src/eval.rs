//! Fit quality: data log-likelihood, MAP labels, adjusted Rand index and the
//! label-aligned squared parameter error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::engine::CHUNK_ROWS;
use crate::error::{Error, Result};
use crate::mixture::{MixtureParams, PreparedMixture};

/// Cluster ids in `0..g`, one per observation.
pub type LabelVector = Vec<usize>;

/// Largest `g` for which [`squared_error`] enumerates all permutations.
pub const ENUMERATION_MAX_G: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub loglik: f64,
    /// Absent when no generative parameters are known.
    pub se: Option<f64>,
    /// Absent when no reference labels are known.
    pub ari: Option<f64>,
    pub runtime_seconds: f64,
}

/// `Σ_i log f(y_i; θ)`, summed with exact rounding so the result does not depend on
/// the order or grouping of the terms.
pub fn dataset_loglik(data: &Dataset, theta: &MixtureParams) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("log-likelihood of an empty data set"));
    }
    check_dim(data, theta)?;
    let prepared = theta.prepare()?;
    let terms: Vec<f64> = data
        .values()
        .par_chunks(CHUNK_ROWS * data.dim())
        .map(|chunk| {
            chunk
                .chunks_exact(data.dim())
                .map(|y| prepared.log_density(y))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    Ok(exact_sum(&terms))
}

/// Per-observation MAP labels; ties go to the lowest component index.
pub fn map_labels(data: &Dataset, theta: &MixtureParams) -> Result<LabelVector> {
    check_dim(data, theta)?;
    let prepared = theta.prepare()?;
    data.values()
        .par_chunks(CHUNK_ROWS * data.dim())
        .map(|chunk| {
            let mut scratch = Vec::new();
            let mut joint = vec![0.0; prepared.g()];
            chunk
                .chunks_exact(data.dim())
                .map(|y| map_label(&prepared, y, &mut scratch, &mut joint))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()
        .map(|parts| parts.concat())
}

fn map_label(prepared: &PreparedMixture, y: &[f64], scratch: &mut Vec<f64>, joint: &mut [f64]) -> Result<usize> {
    prepared.joint_log_densities(y, scratch, joint)?;
    let mut best = 0;
    for z in 1..joint.len() {
        if joint[z] > joint[best] {
            best = z;
        }
    }
    if joint[best] == f64::NEG_INFINITY {
        return Err(Error::DegeneratePoint);
    }
    Ok(best)
}

fn check_dim(data: &Dataset, theta: &MixtureParams) -> Result<()> {
    if data.dim() != theta.dim() {
        return Err(Error::invalid(format!(
            "data dimension {} does not match mixture dimension {}",
            data.dim(),
            theta.dim()
        )));
    }
    Ok(())
}

/// Correctly rounded sum of `values` (Shewchuk's expansion with Python `fsum` rounding).
pub fn exact_sum(values: &[f64]) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    let mut special = 0.0;
    for &v in values {
        if !v.is_finite() {
            special += v;
            continue;
        }
        let mut x = v;
        let mut kept = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    if special != 0.0 || special.is_nan() {
        return special;
    }
    let Some(mut hi) = partials.pop() else { return 0.0 };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    // Round half-even across the remaining partials.
    if let Some(&next) = partials.last() {
        if (lo < 0.0 && next < 0.0) || (lo > 0.0 && next > 0.0) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

/// Hubert–Arabie adjusted Rand index. Returns 1 when both partitions make the
/// denominator vanish.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("label vectors differ in length ({} vs {})", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::invalid("adjusted Rand index needs at least two observations"));
    }
    let (a, ka) = compact(a);
    let (b, kb) = compact(b);
    let mut table = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&i, &j) in a.iter().zip(&b) {
        table[i * kb + j] += 1;
        rows[i] += 1;
        cols[j] += 1;
    }
    let pairs = |c: u64| (c as u128) * (c.saturating_sub(1) as u128) / 2;
    let index: u128 = table.iter().map(|&c| pairs(c)).sum();
    let sum_a: u128 = rows.iter().map(|&c| pairs(c)).sum();
    let sum_b: u128 = cols.iter().map(|&c| pairs(c)).sum();
    let total = pairs(a.len() as u64);
    // ARI = (index - sa·sb/T) / ((sa + sb)/2 - sa·sb/T), scaled by 2T.
    let numerator = 2 * (index * total) as i128 - 2 * (sum_a * sum_b) as i128;
    let denominator = ((sum_a + sum_b) * total) as i128 - 2 * (sum_a * sum_b) as i128;
    if denominator == 0 {
        return Ok(1.0);
    }
    Ok(numerator as f64 / denominator as f64)
}

/// Relabels to `0..k` in order of first appearance.
fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

/// Squared Euclidean distance between the flattened parameter vectors, minimized over
/// component relabelings of `estimate`.
pub fn squared_error(estimate: &MixtureParams, truth: &MixtureParams) -> Result<f64> {
    if estimate.g() != truth.g() || estimate.family() != truth.family() {
        return Err(Error::invalid(format!(
            "cannot compare g={} {:?} with g={} {:?}",
            estimate.g(),
            estimate.family(),
            truth.g(),
            truth.family()
        )));
    }
    let cost = block_costs(estimate, truth);
    let assignment = if truth.g() <= ENUMERATION_MAX_G {
        best_permutation(&cost)
    } else {
        hungarian(&cost)
    };
    Ok(assignment_cost(&cost, &assignment))
}

/// Order-free total so that relabeling either argument cannot change the last bit.
fn assignment_cost(cost: &[Vec<f64>], assignment: &[usize]) -> f64 {
    let picked: Vec<f64> = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).collect();
    exact_sum(&picked)
}

/// `sqrt` of [`squared_error`].
pub fn parameter_distance(estimate: &MixtureParams, truth: &MixtureParams) -> Result<f64> {
    squared_error(estimate, truth).map(f64::sqrt)
}

fn block_costs(estimate: &MixtureParams, truth: &MixtureParams) -> Vec<Vec<f64>> {
    let eb = estimate.component_blocks();
    let tb = truth.component_blocks();
    eb.iter()
        .map(|e| {
            tb.iter()
                .map(|t| e.iter().zip(t).map(|(x, y)| (x - y) * (x - y)).sum())
                .collect()
        })
        .collect()
}

/// Exhaustive search over permutations (Heap's algorithm); `out[i]` is the column matched to row `i`.
pub(crate) fn best_permutation(cost: &[Vec<f64>]) -> Vec<usize> {
    let g = cost.len();
    let mut perm: Vec<usize> = (0..g).collect();
    let total = |p: &[usize]| assignment_cost(cost, p);
    let mut best = perm.clone();
    let mut best_cost = total(&perm);
    let mut c = vec![0usize; g];
    let mut i = 1;
    while i < g {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let t = total(&perm);
            if t < best_cost {
                best_cost = t;
                best.copy_from_slice(&perm);
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Minimum-cost perfect matching on a square matrix (Kuhn–Munkres with potentials).
pub(crate) fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based rows/columns; index 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        out[matched_row[j] - 1] = j - 1;
    }
    out
}
