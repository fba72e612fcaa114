//! Growing compact parameter regions `K_m` and the projection used to reset into `K_0`.
//!
//! For Gaussian mixtures `K_m` requires `π_z ≥ 1/(c₁+m)`, every mean coordinate in
//! `[-(c₂+m), c₂+m]` and every covariance eigenvalue in `[1/(c₃+m), c₃+m]`. Count
//! families use the same weight floor and confine rates to `[1/(c₃+m), c₃+m]`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{ComponentParams, MixtureParams};

/// Relative inward margin applied to coordinates the reset projection has to clip, so the
/// projected parameters survive the round trip through sufficient statistics inside `K_0`.
const RESET_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationBounds {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl TruncationBounds {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        if [c1, c2, c3].iter().any(|c| !(c.is_finite() && *c >= 1.0)) {
            return Err(Error::invalid(format!("truncation constants must be >= 1, got ({c1}, {c2}, {c3})")));
        }
        Ok(Self { c1, c2, c3 })
    }

    /// `c₁ = c₂ = c₃ = c`.
    pub fn uniform(c: f64) -> Result<Self> {
        Self::new(c, c, c)
    }
}

/// The current truncation set `K_m` and its reset counter.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRegion {
    bounds: TruncationBounds,
    level: u64,
    events: u64,
}

impl TruncationRegion {
    pub fn new(bounds: TruncationBounds) -> Self {
        Self::at_level(bounds, 0)
    }

    pub fn at_level(bounds: TruncationBounds, level: u64) -> Self {
        Self {
            bounds,
            level,
            events: 0,
        }
    }

    pub fn bounds(&self) -> TruncationBounds {
        self.bounds
    }

    /// The index `m`.
    pub fn level(&self) -> u64 {
        self.level
    }

    /// Number of resets recorded on this region.
    pub fn events(&self) -> u64 {
        self.events
    }

    pub(crate) fn record_reset(&mut self) {
        self.level += 1;
        self.events += 1;
    }

    pub fn contains(&self, theta: &MixtureParams) -> bool {
        let m = self.level as f64;
        let weight_floor = 1.0 / (self.bounds.c1 + m);
        let mean_box = self.bounds.c2 + m;
        let (eig_lo, eig_hi) = (1.0 / (self.bounds.c3 + m), self.bounds.c3 + m);

        if theta.weights().iter().any(|&w| w < weight_floor) {
            return false;
        }
        theta.components().iter().all(|c| match c {
            ComponentParams::Gaussian { mean, covariance } => {
                if mean.iter().any(|v| v.abs() > mean_box) {
                    return false;
                }
                let eig = SymmetricEigen::new(covariance.clone()).eigenvalues;
                let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                lo >= eig_lo && hi <= eig_hi
            }
            ComponentParams::Exponential { rate } | ComponentParams::Poisson { rate } => {
                *rate >= eig_lo && *rate <= eig_hi
            }
        })
    }
}

pub fn region_contains(theta: &MixtureParams, region: &TruncationRegion) -> bool {
    region.contains(theta)
}

/// Projects `theta` into `K_0`: weights onto the floored simplex, mean coordinates into the
/// box, covariance eigenvalues (or rates) into `[1/c₃, c₃]`. Parameters already in `K_0`
/// are returned unchanged.
pub fn project_into_base(theta: &MixtureParams, bounds: &TruncationBounds) -> Result<MixtureParams> {
    let g = theta.g();
    let floor = 1.0 / bounds.c1;
    if g as f64 * floor > 1.0 {
        return Err(Error::UnrecoverableTruncation(format!(
            "{g} components cannot each keep weight >= 1/{}",
            bounds.c1
        )));
    }
    let weights = if theta.weights().iter().all(|&w| w >= floor) {
        theta.weights().to_vec()
    } else {
        project_floored_simplex(theta.weights(), floor * (1.0 + RESET_MARGIN))
    };

    let (lo, hi) = (1.0 / bounds.c3, bounds.c3);
    let (lo_in, hi_in) = (lo * (1.0 + RESET_MARGIN), hi * (1.0 - RESET_MARGIN));
    let clip_rate = |r: f64| if r < lo { lo_in } else if r > hi { hi_in } else { r };
    let components = theta
        .components()
        .iter()
        .map(|c| match c {
            ComponentParams::Gaussian { mean, covariance } => {
                let limit = bounds.c2;
                let mean = DVector::from_iterator(
                    mean.len(),
                    mean.iter().map(|&v| if v.abs() > limit { v.signum() * limit * (1.0 - RESET_MARGIN) } else { v }),
                );
                ComponentParams::Gaussian {
                    mean,
                    covariance: clip_eigenvalues(covariance, lo, hi, lo_in, hi_in),
                }
            }
            ComponentParams::Exponential { rate } => ComponentParams::Exponential { rate: clip_rate(*rate) },
            ComponentParams::Poisson { rate } => ComponentParams::Poisson { rate: clip_rate(*rate) },
        })
        .collect();

    let projected = MixtureParams::new(weights, components)
        .map_err(|e| Error::UnrecoverableTruncation(format!("projection produced invalid parameters: {e}")))?;
    debug_assert!(TruncationRegion::new(*bounds).contains(&projected));
    Ok(projected)
}

fn clip_eigenvalues(cov: &DMatrix<f64>, lo: f64, hi: f64, lo_in: f64, hi_in: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(cov.clone());
    if eig.eigenvalues.iter().all(|&v| v >= lo && v <= hi) {
        return cov.clone();
    }
    let clipped = eig.eigenvalues.map(|v| if v < lo || v.is_nan() { lo_in } else if v > hi { hi_in } else { v });
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    (&rebuilt + rebuilt.transpose()) * 0.5
}

/// Euclidean projection of a probability vector onto `{π : Σπ = 1, π_z ≥ floor}`.
fn project_floored_simplex(weights: &[f64], floor: f64) -> Vec<f64> {
    let g = weights.len();
    let mut floored = vec![false; g];
    loop {
        let free: Vec<usize> = (0..g).filter(|&z| !floored[z]).collect();
        let n_floored = g - free.len();
        let free_mass: f64 = free.iter().map(|&z| weights[z]).sum();
        let shift = (free_mass - (1.0 - n_floored as f64 * floor)) / free.len() as f64;
        let mut changed = false;
        for &z in &free {
            if weights[z] - shift < floor {
                floored[z] = true;
                changed = true;
            }
        }
        if !changed {
            let mut out: Vec<f64> = (0..g)
                .map(|z| if floored[z] { floor } else { weights[z] - shift })
                .collect();
            // Renormalize away the last few ulps so the sum check in MixtureParams::new holds.
            let total: f64 = out.iter().sum();
            out.iter_mut().for_each(|w| *w /= total);
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(mean: Vec<f64>, cov: &[f64]) -> ComponentParams {
        let d = mean.len();
        ComponentParams::gaussian(mean, DMatrix::from_row_slice(d, d, cov))
    }

    fn wide() -> TruncationBounds {
        TruncationBounds::uniform(1000.0).unwrap()
    }

    #[test]
    fn interior_point() {
        let theta = MixtureParams::new(
            vec![0.5, 0.5],
            vec![gauss(vec![0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]), gauss(vec![0.0, 0.0], &[1.0, 0.0, 0.0, 1.0])],
        )
        .unwrap();
        assert!(region_contains(&theta, &TruncationRegion::new(wide())));
    }

    #[test]
    fn weight_floor_violated() {
        let theta = MixtureParams::new(vec![1e-6, 1.0 - 1e-6], vec![gauss(vec![0.0], &[1.0]), gauss(vec![1.0], &[1.0])])
            .unwrap();
        assert!(!region_contains(&theta, &TruncationRegion::new(wide())));
    }

    #[test]
    fn eigenvalue_threshold_moves_with_level() {
        let theta = MixtureParams::new(vec![1.0], vec![gauss(vec![0.0, 0.0], &[1e-4, 0.0, 0.0, 1.0])]).unwrap();
        assert!(!TruncationRegion::at_level(wide(), 0).contains(&theta));
        assert!(TruncationRegion::at_level(wide(), 9001).contains(&theta));
    }

    #[test]
    fn mean_box_and_rates() {
        let theta = MixtureParams::new(vec![1.0], vec![gauss(vec![12.0], &[1.0])]).unwrap();
        let b = TruncationBounds::uniform(10.0).unwrap();
        assert!(!TruncationRegion::at_level(b, 1).contains(&theta));
        assert!(TruncationRegion::at_level(b, 2).contains(&theta));

        let rates = MixtureParams::new(vec![1.0], vec![ComponentParams::Poisson { rate: 0.05 }]).unwrap();
        assert!(!TruncationRegion::new(b).contains(&rates));
        assert!(TruncationRegion::at_level(b, 10).contains(&rates));
    }

    #[test]
    fn projection_is_identity_inside_base() {
        let theta = MixtureParams::new(
            vec![0.3, 0.7],
            vec![gauss(vec![1.0, -2.0], &[2.0, 0.3, 0.3, 1.0]), gauss(vec![0.0, 5.0], &[0.5, 0.0, 0.0, 0.5])],
        )
        .unwrap();
        assert_eq!(project_into_base(&theta, &wide()).unwrap(), theta);
    }

    #[test]
    fn projection_clips_eigenvalue() {
        let theta = MixtureParams::new(vec![1.0], vec![gauss(vec![0.0, 0.0], &[1e-9, 0.0, 0.0, 1.0])]).unwrap();
        let p = project_into_base(&theta, &wide()).unwrap();
        let ComponentParams::Gaussian { covariance, .. } = &p.components()[0] else { unreachable!() };
        let ev = crate::linalg::symmetric_eigenvalues(covariance);
        assert!((ev[0] - 1e-3).abs() < 1e-3 * 1e-8, "{ev:?}");
        assert!((ev[1] - 1.0).abs() < 1e-12);
        assert!(TruncationRegion::new(wide()).contains(&p));
    }

    #[test]
    fn projection_floors_weights() {
        let theta = MixtureParams::new(
            vec![1e-6, 0.4, 0.6 - 1e-6],
            (0..3).map(|_| ComponentParams::Exponential { rate: 1.0 }).collect(),
        )
        .unwrap();
        let b = TruncationBounds::new(10.0, 1.0, 10.0).unwrap();
        let p = project_into_base(&theta, &b).unwrap();
        assert!(p.weights().iter().all(|&w| w >= 0.1));
        assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(TruncationRegion::new(b).contains(&p));
    }

    #[test]
    fn projection_impossible_when_floor_too_high() {
        let theta = MixtureParams::new(
            vec![0.25; 4],
            (0..4).map(|_| ComponentParams::Poisson { rate: 1.0 }).collect(),
        )
        .unwrap();
        let b = TruncationBounds::new(2.0, 1.0, 10.0).unwrap();
        assert!(matches!(project_into_base(&theta, &b), Err(Error::UnrecoverableTruncation(_))));
    }
}
