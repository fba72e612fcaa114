use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mixture::{Family, MixtureParams, SuffStats};

/// How starting parameters are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// Moments of a uniform random partition ([`random_partition_init`]).
    #[default]
    RandomPartition,
    /// Blocks around D²-sampled seeds ([`seeded_partition_init`]).
    SeededPartition,
}

pub const MAX_INIT_ATTEMPTS: usize = 100;

fn check_shape(data: &Dataset, family: Family, g: usize) -> Result<()> {
    let d = data.dim();
    if g == 0 {
        return Err(Error::invalid("need at least one component"));
    }
    if family.dim() != d {
        return Err(Error::invalid(format!("family dimension {} but data dimension {d}", family.dim())));
    }
    if data.n() < g * (d + 2) {
        return Err(Error::invalid(format!(
            "{} observations are too few for {g} blocks in dimension {d}",
            data.n()
        )));
    }
    Ok(())
}

/// `θ̄` of the hard-assignment statistic: block proportions, means and ML covariances.
fn block_estimate(data: &Dataset, family: Family, g: usize, labels: &[usize]) -> Result<MixtureParams> {
    let mut stats = SuffStats::zeros(family, g);
    let mut one_hot = vec![0.0; g];
    for (y, &l) in data.rows().zip(labels) {
        one_hot[l] = 1.0;
        stats.accumulate(y, &one_hot);
        one_hot[l] = 0.0;
    }
    stats.scale(1.0 / data.n() as f64);
    stats.theta_bar()
}

/// Random-partition initializer: every observation gets an independent uniform label in
/// `0..g` and each block contributes its proportion, mean and (full, maximum-likelihood)
/// covariance, or its rate for count families.
///
/// A partition is redrawn when some block has fewer than `d + 1` points or its estimate is
/// degenerate. Returns the parameters together with the accepted labels.
pub fn random_partition_init<R: Rng + ?Sized>(
    data: &Dataset,
    family: Family,
    g: usize,
    rng: &mut R,
) -> Result<(MixtureParams, Vec<usize>)> {
    let d = data.dim();
    check_shape(data, family, g)?;
    let mut labels = vec![0usize; data.n()];
    let mut counts = vec![0usize; g];
    for _ in 0..MAX_INIT_ATTEMPTS {
        counts.iter_mut().for_each(|c| *c = 0);
        for l in labels.iter_mut() {
            *l = rng.random_range(0..g);
            counts[*l] += 1;
        }
        if counts.iter().any(|&c| c < d + 1) {
            continue;
        }
        match block_estimate(data, family, g, &labels) {
            Ok(theta) => return Ok((theta, labels)),
            Err(e) if e.is_degenerate_estimate() => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InitializationFailed {
        attempts: MAX_INIT_ATTEMPTS,
    })
}

/// Partition seeded by D² sampling: the first seed is a uniform random observation, each
/// further seed is drawn with probability proportional to its squared distance from the
/// nearest seed so far. Observations join their nearest seed (ties to the lowest index)
/// and each block contributes its moments as in [`random_partition_init`].
pub fn seeded_partition_init<R: Rng + ?Sized>(
    data: &Dataset,
    family: Family,
    g: usize,
    rng: &mut R,
) -> Result<(MixtureParams, Vec<usize>)> {
    let d = data.dim();
    check_shape(data, family, g)?;
    let n = data.n();
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    for _ in 0..MAX_INIT_ATTEMPTS {
        let mut seeds = vec![rng.random_range(0..n)];
        let mut nearest: Vec<f64> = data.rows().map(|y| sq(y, data.row(seeds[0]))).collect();
        while seeds.len() < g {
            let total: f64 = nearest.iter().sum();
            let next = if total > 0.0 {
                let mut u = rng.random::<f64>() * total;
                let mut pick = n - 1;
                for (i, &w) in nearest.iter().enumerate() {
                    if u < w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
                pick
            } else {
                rng.random_range(0..n)
            };
            seeds.push(next);
            for (m, y) in nearest.iter_mut().zip(data.rows()) {
                *m = m.min(sq(y, data.row(next)));
            }
        }
        let labels: Vec<usize> = data
            .rows()
            .map(|y| {
                let mut best = 0;
                for z in 1..g {
                    if sq(y, data.row(seeds[z])) < sq(y, data.row(seeds[best])) {
                        best = z;
                    }
                }
                best
            })
            .collect();
        let mut counts = vec![0usize; g];
        labels.iter().for_each(|&l| counts[l] += 1);
        if counts.iter().any(|&c| c < d + 1) {
            continue;
        }
        match block_estimate(data, family, g, &labels) {
            Ok(theta) => return Ok((theta, labels)),
            Err(e) if e.is_degenerate_estimate() => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InitializationFailed {
        attempts: MAX_INIT_ATTEMPTS,
    })
}

/// Dispatches on `scheme`.
pub fn initialize<R: Rng + ?Sized>(
    scheme: InitScheme,
    data: &Dataset,
    family: Family,
    g: usize,
    rng: &mut R,
) -> Result<(MixtureParams, Vec<usize>)> {
    match scheme {
        InitScheme::RandomPartition => random_partition_init(data, family, g, rng),
        InitScheme::SeededPartition => seeded_partition_init(data, family, g, rng),
    }
}
