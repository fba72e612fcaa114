//! Log-space component densities and posterior responsibilities.

use std::f64::consts::PI;

use nalgebra::Cholesky;

use super::params::{ComponentParams, MixtureParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Prepared {
    Gaussian {
        mean: Vec<f64>,
        /// Lower Cholesky factor, row-major `d × d`.
        chol: Vec<f64>,
        log_norm: f64,
    },
    Exponential {
        rate: f64,
        log_rate: f64,
    },
    Poisson {
        rate: f64,
        log_rate: f64,
    },
}

/// A mixture with per-component factorizations cached for repeated density evaluation.
#[derive(Debug, Clone)]
pub struct PreparedMixture {
    dim: usize,
    log_weights: Vec<f64>,
    components: Vec<Prepared>,
}

impl PreparedMixture {
    /// Fails with a numeric-domain error when a covariance cannot be Cholesky-factorized.
    pub fn new(theta: &MixtureParams) -> Result<Self> {
        let components = theta
            .components()
            .iter()
            .enumerate()
            .map(|(z, c)| prepare_component(z, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: theta.dim(),
            log_weights: theta.weights().iter().map(|w| w.ln()).collect(),
            components,
        })
    }

    pub fn g(&self) -> usize {
        self.log_weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes `log π_z + log f(y; ω_z)` for every component into `out`.
    /// `scratch` is resized as needed and reused across calls.
    pub fn joint_log_densities(&self, y: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::invalid(format!(
                "observation has dimension {}, mixture expects {}",
                y.len(),
                self.dim
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observation has non-finite coordinates"));
        }
        debug_assert_eq!(out.len(), self.g());
        for ((slot, lw), comp) in out.iter_mut().zip(&self.log_weights).zip(&self.components) {
            *slot = lw + component_log_density(comp, y, scratch)?;
        }
        Ok(())
    }

    /// `log f(y; θ)` via log-sum-exp over the joint terms.
    pub fn log_density(&self, y: &[f64]) -> Result<f64> {
        let mut scratch = Vec::new();
        let mut terms = vec![0.0; self.g()];
        self.joint_log_densities(y, &mut scratch, &mut terms)?;
        Ok(crate::linalg::log_sum_exp(&terms))
    }

    /// Turns joint log densities (as written by [`joint_log_densities`](Self::joint_log_densities))
    /// into normalized responsibilities in place and returns `log f(y; θ)`.
    pub fn normalize_in_place(terms: &mut [f64]) -> Result<f64> {
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::DegeneratePoint);
        }
        if !max.is_finite() {
            return Err(Error::NumericDomain("infinite component density".into()));
        }
        let mut sum = 0.0;
        for t in terms.iter_mut() {
            *t = (*t - max).exp();
            sum += *t;
        }
        for t in terms.iter_mut() {
            *t /= sum;
        }
        Ok(max + sum.ln())
    }

    /// Posterior component probabilities `τ_z(y; θ)`.
    pub fn responsibilities(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut scratch = Vec::new();
        let mut terms = vec![0.0; self.g()];
        self.joint_log_densities(y, &mut scratch, &mut terms)?;
        Self::normalize_in_place(&mut terms)?;
        Ok(terms)
    }

    /// Mean and row-major lower Cholesky factor of Gaussian component `z`.
    pub(crate) fn gaussian_factor(&self, z: usize) -> Option<(&[f64], &[f64])> {
        match &self.components[z] {
            Prepared::Gaussian { mean, chol, .. } => Some((mean, chol)),
            _ => None,
        }
    }

    pub(crate) fn rate(&self, z: usize) -> Option<f64> {
        match &self.components[z] {
            Prepared::Exponential { rate, .. } | Prepared::Poisson { rate, .. } => Some(*rate),
            Prepared::Gaussian { .. } => None,
        }
    }
}

fn prepare_component(z: usize, c: &ComponentParams) -> Result<Prepared> {
    Ok(match c {
        ComponentParams::Gaussian { mean, covariance } => {
            let d = mean.len();
            let chol = Cholesky::new(covariance.clone()).ok_or_else(|| {
                Error::NumericDomain(format!("covariance of component {z} is not positive definite"))
            })?;
            let l = chol.l();
            let mut packed = vec![0.0; d * d];
            let mut log_det_half = 0.0;
            for i in 0..d {
                for j in 0..=i {
                    packed[i * d + j] = l[(i, j)];
                }
                log_det_half += l[(i, i)].ln();
            }
            if !log_det_half.is_finite() {
                return Err(Error::NumericDomain(format!("covariance of component {z} is singular")));
            }
            Prepared::Gaussian {
                mean: mean.iter().copied().collect(),
                chol: packed,
                log_norm: -0.5 * d as f64 * (2.0 * PI).ln() - log_det_half,
            }
        }
        ComponentParams::Exponential { rate } => Prepared::Exponential {
            rate: *rate,
            log_rate: rate.ln(),
        },
        ComponentParams::Poisson { rate } => Prepared::Poisson {
            rate: *rate,
            log_rate: rate.ln(),
        },
    })
}

#[inline]
fn component_log_density(comp: &Prepared, y: &[f64], scratch: &mut Vec<f64>) -> Result<f64> {
    Ok(match comp {
        Prepared::Gaussian { mean, chol, log_norm } => {
            let d = mean.len();
            scratch.resize(d, 0.0);
            // Forward substitution L w = y - μ; the Mahalanobis term is |w|².
            let mut quad = 0.0;
            for i in 0..d {
                let row = &chol[i * d..i * d + i];
                let mut acc = y[i] - mean[i];
                for (l, w) in row.iter().zip(scratch.iter()) {
                    acc -= l * w;
                }
                let w = acc / chol[i * d + i];
                scratch[i] = w;
                quad += w * w;
            }
            log_norm - 0.5 * quad
        }
        Prepared::Exponential { rate, log_rate } => {
            let x = y[0];
            if x < 0.0 {
                f64::NEG_INFINITY
            } else {
                log_rate - rate * x
            }
        }
        Prepared::Poisson { rate, log_rate } => {
            let k = y[0];
            if k < 0.0 || k.fract() != 0.0 {
                return Err(Error::invalid(format!("Poisson observation {k} is not a nonnegative integer")));
            }
            k * log_rate - rate - libm::lgamma(k + 1.0)
        }
    })
}

impl MixtureParams {
    /// Mixture log density `log Σ_z π_z f(y; ω_z)`.
    pub fn log_density(&self, y: &[f64]) -> Result<f64> {
        PreparedMixture::new(self)?.log_density(y)
    }

    pub fn responsibilities(&self, y: &[f64]) -> Result<Vec<f64>> {
        PreparedMixture::new(self)?.responsibilities(y)
    }

    pub fn prepare(&self) -> Result<PreparedMixture> {
        PreparedMixture::new(self)
    }
}
