//! Lloyd's k-means with farthest-point reseeding of empty clusters.

use rand::Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// `g` centers, each of length `d`.
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after the initial centering and after each sweep.
    pub wcss: Vec<f64>,
    pub sweeps: usize,
}

/// Runs at most `max_sweeps` assignment/update sweeps from `init_labels`, or from a uniform
/// random labeling drawn with `rng` when none is given.
pub fn kmeans<R: Rng + ?Sized>(
    data: &Dataset,
    g: usize,
    max_sweeps: usize,
    init_labels: Option<&[usize]>,
    rng: &mut R,
) -> Result<KMeansResult> {
    let n = data.n();
    if g == 0 || g > n {
        return Err(Error::invalid(format!("need 1 <= g <= n, got g={g}, n={n}")));
    }
    let mut labels = match init_labels {
        Some(l) if l.len() != n => return Err(Error::invalid("initial labels have the wrong length")),
        Some(l) if l.iter().any(|&z| z >= g) => return Err(Error::invalid("initial label out of range")),
        Some(l) => l.to_vec(),
        None => (0..n).map(|_| rng.random_range(0..g)).collect(),
    };
    let mut centers = update_centers(data, g, &mut labels);
    let mut wcss = vec![within_ss(data, &labels, &centers)];
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        let mut changed = false;
        for (i, y) in data.rows().enumerate() {
            let z = nearest(y, &centers);
            if z != labels[i] && sq_dist(y, &centers[z]) < sq_dist(y, &centers[labels[i]]) {
                labels[i] = z;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        sweeps += 1;
        centers = update_centers(data, g, &mut labels);
        let current = within_ss(data, &labels, &centers);
        let previous = *wcss.last().expect("nonempty");
        assert!(
            current <= previous * (1.0 + 1e-12) + 1e-12,
            "WCSS increased from {previous} to {current}"
        );
        wcss.push(current);
    }
    Ok(KMeansResult {
        labels,
        centers,
        wcss,
        sweeps,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest center, ties to the lowest index.
fn nearest(y: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = sq_dist(y, &centers[0]);
    for (z, c) in centers.iter().enumerate().skip(1) {
        let d = sq_dist(y, c);
        if d < best_d {
            best = z;
            best_d = d;
        }
    }
    best
}

fn means(data: &Dataset, g: usize, labels: &[usize]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let d = data.dim();
    let mut sums = vec![vec![0.0; d]; g];
    let mut counts = vec![0usize; g];
    for (y, &z) in data.rows().zip(labels) {
        counts[z] += 1;
        sums[z].iter_mut().zip(y).for_each(|(s, v)| *s += v);
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    (sums, counts)
}

/// Cluster means; each empty cluster takes over the point farthest from its own center
/// among clusters that can spare one.
fn update_centers(data: &Dataset, g: usize, labels: &mut [usize]) -> Vec<Vec<f64>> {
    let (mut centers, mut counts) = means(data, g, labels);
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let mut far = None;
        let mut far_d = -1.0;
        for (i, y) in data.rows().enumerate() {
            let z = labels[i];
            if counts[z] < 2 {
                continue;
            }
            let dist = sq_dist(y, &centers[z]);
            if dist > far_d {
                far_d = dist;
                far = Some(i);
            }
        }
        let i = far.expect("g <= n leaves a cluster with two points");
        counts[labels[i]] -= 1;
        labels[i] = empty;
        counts[empty] = 1;
        (centers, counts) = means(data, g, labels);
    }
    centers
}

fn within_ss(data: &Dataset, labels: &[usize], centers: &[Vec<f64>]) -> f64 {
    data.rows().zip(labels).map(|(y, &z)| sq_dist(y, &centers[z])).sum()
}
