//! Sufficient statistics of the complete-data likelihood and the maps between
//! statistics and parameters.
//!
//! Per component `z` the statistic holds a weight mass `s1`, a first moment `s2`
//! and, for Gaussian mixtures, a second moment `S3` stored as a packed upper
//! triangle. Count families (exponential, Poisson) keep only `s1` and a scalar `s2`.

use nalgebra::{DMatrix, DVector};

use super::density::PreparedMixture;
use super::params::{ComponentParams, Family, MixtureParams};
use crate::error::{Error, Result};
use crate::linalg::{pack_symmetric, packed_len, symmetric_eigenvalues, unpack_symmetric};

/// Component masses at or below this value are treated as empty by the M-step.
pub const S1_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentStats {
    pub s1: f64,
    pub s2: Vec<f64>,
    /// Packed upper triangle of `S3`; empty for count families.
    pub s3: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats {
    family: Family,
    components: Vec<ComponentStats>,
}

impl SuffStats {
    pub fn zeros(family: Family, g: usize) -> Self {
        let d = family.dim();
        let s3_len = if family.is_count() { 0 } else { packed_len(d) };
        let components = (0..g)
            .map(|_| ComponentStats {
                s1: 0.0,
                s2: vec![0.0; d],
                s3: vec![0.0; s3_len],
            })
            .collect();
        Self { family, components }
    }

    /// Builds a statistic from explicit per-component parts; shapes are checked.
    pub fn from_components(family: Family, components: Vec<ComponentStats>) -> Result<Self> {
        let d = family.dim();
        let s3_len = if family.is_count() { 0 } else { packed_len(d) };
        if components.is_empty() {
            return Err(Error::invalid("sufficient statistic needs at least one component"));
        }
        for (z, c) in components.iter().enumerate() {
            if c.s2.len() != d || c.s3.len() != s3_len {
                return Err(Error::invalid(format!("component {z} statistic has the wrong shape")));
            }
        }
        Ok(Self { family, components })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn g(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ComponentStats] {
        &self.components
    }

    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(|c| c.s1).sum()
    }

    /// Full `S3` matrix of Gaussian component `z`.
    pub fn s3_matrix(&self, z: usize) -> DMatrix<f64> {
        unpack_symmetric(self.family.dim(), &self.components[z].s3)
    }

    /// Adds `weights[z] · s(y)` to component `z` for every `z`.
    pub fn accumulate(&mut self, y: &[f64], weights: &[f64]) {
        let d = y.len();
        let count = self.family.is_count();
        for (c, &t) in self.components.iter_mut().zip(weights) {
            c.s1 += t;
            for (s, &v) in c.s2.iter_mut().zip(y) {
                *s += t * v;
            }
            if !count {
                let mut k = 0;
                for i in 0..d {
                    let ty = t * y[i];
                    for &yj in &y[i..] {
                        c.s3[k] += ty * yj;
                        k += 1;
                    }
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &SuffStats) {
        debug_assert_eq!(self.g(), other.g());
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.s1 += b.s1;
            a.s2.iter_mut().zip(&b.s2).for_each(|(x, y)| *x += y);
            a.s3.iter_mut().zip(&b.s3).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for c in &mut self.components {
            c.s1 *= factor;
            c.s2.iter_mut().for_each(|x| *x *= factor);
            c.s3.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// The weighted average `(1 - γ)·self + γ·target`.
    ///
    /// Written in this form (rather than `self + γ(target - self)`) so that `γ = 1`
    /// returns `target` and `γ = 0` returns `self` bit for bit.
    pub fn blend(&self, target: &SuffStats, gamma: f64) -> SuffStats {
        debug_assert_eq!(self.g(), target.g());
        let keep = 1.0 - gamma;
        let mix = |a: f64, b: f64| keep * a + gamma * b;
        let components = self
            .components
            .iter()
            .zip(&target.components)
            .map(|(a, b)| ComponentStats {
                s1: mix(a.s1, b.s1),
                s2: a.s2.iter().zip(&b.s2).map(|(&x, &y)| mix(x, y)).collect(),
                s3: a.s3.iter().zip(&b.s3).map(|(&x, &y)| mix(x, y)).collect(),
            })
            .collect();
        SuffStats {
            family: self.family,
            components,
        }
    }

    /// Conditional expectation `s̄(y; θ)` of the complete-data statistic.
    pub fn sbar(y: &[f64], theta: &MixtureParams) -> Result<SuffStats> {
        let prepared = theta.prepare()?;
        let tau = prepared.responsibilities(y)?;
        let mut s = SuffStats::zeros(theta.family(), theta.g());
        s.accumulate(y, &tau);
        Ok(s)
    }

    /// Statistic whose M-step image is `theta`: `s1 = π`, `s2 = π μ`, `S3 = π (Σ + μ μᵀ)`
    /// for Gaussians, `s2 = π / λ` (exponential) or `s2 = π λ` (Poisson).
    pub fn from_params(theta: &MixtureParams) -> SuffStats {
        let components = theta
            .weights()
            .iter()
            .zip(theta.components())
            .map(|(&w, c)| match c {
                ComponentParams::Gaussian { mean, covariance } => {
                    let second = covariance + mean * mean.transpose();
                    let mut s3 = pack_symmetric(&second);
                    s3.iter_mut().for_each(|v| *v *= w);
                    ComponentStats {
                        s1: w,
                        s2: mean.iter().map(|m| w * m).collect(),
                        s3,
                    }
                }
                ComponentParams::Exponential { rate } => ComponentStats {
                    s1: w,
                    s2: vec![w / rate],
                    s3: Vec::new(),
                },
                ComponentParams::Poisson { rate } => ComponentStats {
                    s1: w,
                    s2: vec![w * rate],
                    s3: Vec::new(),
                },
            })
            .collect();
        SuffStats {
            family: theta.family(),
            components,
        }
    }

    /// The M-step map `θ̄(s)`.
    ///
    /// Weights are `s1_z / Σ_j s1_j`. Gaussian components get `μ = s2/s1` and
    /// `Σ = S3/s1 - μ μᵀ`; exponential rates are `s1/s2` and Poisson rates `s2/s1`
    /// (the weighted maximum-likelihood estimates).
    pub fn theta_bar(&self) -> Result<MixtureParams> {
        for (z, c) in self.components.iter().enumerate() {
            if !(c.s1 > S1_FLOOR) {
                return Err(Error::EmptyComponent {
                    component: z,
                    mass: c.s1,
                });
            }
        }
        let total = self.total_mass();
        let weights: Vec<f64> = self.components.iter().map(|c| c.s1 / total).collect();
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(z, c)| self.component_estimate(z, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(MixtureParams::new_unchecked(weights, components))
    }

    fn component_estimate(&self, z: usize, c: &ComponentStats) -> Result<ComponentParams> {
        match self.family {
            Family::Gaussian { dim } => {
                let mean: Vec<f64> = c.s2.iter().map(|v| v / c.s1).collect();
                let mut cov = DMatrix::zeros(dim, dim);
                let mut k = 0;
                for i in 0..dim {
                    for j in i..dim {
                        let v = c.s3[k] / c.s1 - mean[i] * mean[j];
                        cov[(i, j)] = v;
                        cov[(j, i)] = v;
                        k += 1;
                    }
                }
                let min = symmetric_eigenvalues(&cov)[0];
                if !(min > 0.0) || mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::DegenerateCovariance {
                        component: z,
                        min_eigenvalue: min,
                    });
                }
                Ok(ComponentParams::Gaussian {
                    mean: DVector::from_vec(mean),
                    covariance: cov,
                })
            }
            Family::Exponential => {
                let rate = c.s1 / c.s2[0];
                check_rate(z, rate)?;
                Ok(ComponentParams::Exponential { rate })
            }
            Family::Poisson => {
                let rate = c.s2[0] / c.s1;
                check_rate(z, rate)?;
                Ok(ComponentParams::Poisson { rate })
            }
        }
    }
}

fn check_rate(z: usize, rate: f64) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateRate { component: z, rate })
    }
}

impl MixtureParams {
    pub fn sbar(&self, y: &[f64]) -> Result<SuffStats> {
        SuffStats::sbar(y, self)
    }
}

/// Accumulates `Σ s̄(y_i; θ)` over a slice of rows with a prepared mixture.
pub(crate) fn accumulate_rows<'a>(
    prepared: &PreparedMixture,
    family: Family,
    rows: impl Iterator<Item = &'a [f64]>,
) -> Result<SuffStats> {
    let g = prepared.g();
    let mut acc = SuffStats::zeros(family, g);
    let mut scratch = Vec::new();
    let mut terms = vec![0.0; g];
    for y in rows {
        prepared.joint_log_densities(y, &mut scratch, &mut terms)?;
        PreparedMixture::normalize_in_place(&mut terms)?;
        acc.accumulate(y, &terms);
    }
    Ok(acc)
}
