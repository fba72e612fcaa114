#![allow(dead_code)]

use mbem::{ComponentParams, MixtureParams};
use nalgebra::DMatrix;

/// Maximizer of a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
        if hi - lo < 1e-13 * (1.0 + lo.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Rate maximizing `a·ln λ − b·λ`, searched on `ln λ`.
pub fn golden_rate(a: f64, b: f64) -> f64 {
    golden_max(|u| a * u - b * u.exp(), -12.0, 12.0).exp()
}

/// Weights maximizing `Σ s_z ln π_z` over the simplex, for `g ∈ {1, 2, 3}`, by nested
/// golden-section search.
pub fn golden_weights(s: &[f64]) -> Vec<f64> {
    let ln = |x: f64| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
    match s.len() {
        1 => vec![1.0],
        2 => {
            let p = golden_max(|p| s[0] * ln(p) + s[1] * ln(1.0 - p), 0.0, 1.0);
            vec![p, 1.0 - p]
        }
        3 => {
            let inner = |p1: f64| {
                let rest = 1.0 - p1;
                let p2 = golden_max(|p2| s[1] * ln(p2) + s[2] * ln(rest - p2), 0.0, rest);
                (p2, s[0] * ln(p1) + s[1] * ln(p2) + s[2] * ln(rest - p2))
            };
            let p1 = golden_max(|p1| inner(p1).1, 0.0, 1.0);
            let p2 = inner(p1).0;
            vec![p1, p2, 1.0 - p1 - p2]
        }
        g => panic!("golden_weights supports g <= 3, got {g}"),
    }
}

pub fn gauss(mean: &[f64], cov: &[f64]) -> ComponentParams {
    let d = mean.len();
    ComponentParams::gaussian(mean.to_vec(), DMatrix::from_row_slice(d, d, cov))
}

pub fn gauss1(mu: f64, var: f64) -> ComponentParams {
    gauss(&[mu], &[var])
}

pub fn max_abs_diff(a: &MixtureParams, b: &MixtureParams) -> f64 {
    a.flatten()
        .iter()
        .zip(b.flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_rel_diff(a: &MixtureParams, b: &MixtureParams) -> f64 {
    a.flatten()
        .iter()
        .zip(b.flatten())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Hubert–Arabie ARI by enumerating every pair of observations.
pub fn ari_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut total) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            total += 1.0;
            if sa && sb {
                both += 1.0;
            }
            if sa {
                only_a += 1.0;
            }
            if sb {
                only_b += 1.0;
            }
        }
    }
    let expected = only_a * only_b / total;
    let max = 0.5 * (only_a + only_b);
    if max == expected {
        return 1.0;
    }
    (both - expected) / (max - expected)
}

use mbem::Dataset;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Random Gaussian mixture with well-conditioned covariances `A Aᵀ + ½ I`.
pub fn random_gaussian<R: Rng>(d: usize, g: usize, spread: f64, rng: &mut R) -> MixtureParams {
    let raw: Vec<f64> = (0..g).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let components = (0..g)
        .map(|_| {
            let mean: Vec<f64> = (0..d).map(|_| spread * rng.sample::<f64, _>(StandardNormal)).collect();
            let a = DMatrix::from_fn(d, d, |_, _| 0.7 * rng.sample::<f64, _>(StandardNormal));
            let cov = &a * a.transpose() + DMatrix::identity(d, d) * 0.5;
            let cov = (&cov + cov.transpose()) * 0.5;
            ComponentParams::gaussian(mean, cov)
        })
        .collect();
    MixtureParams::new(weights, components).unwrap()
}

/// A random small instance: truth, sample drawn from it and an unrelated starting point.
pub fn random_instance<R: Rng>(max_d: usize, max_g: usize, min_n: usize, max_n: usize, rng: &mut R) -> (MixtureParams, Dataset, MixtureParams) {
    let d = rng.random_range(1..=max_d);
    let g = rng.random_range(1..=max_g);
    let n = rng.random_range(min_n..=max_n);
    let truth = random_gaussian(d, g, 3.0, rng);
    let (data, _) = truth.sample(n, rng).unwrap();
    let start = random_gaussian(d, g, 1.0, rng);
    (truth, data, start)
}

pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
