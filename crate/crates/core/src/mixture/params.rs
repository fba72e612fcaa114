use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{relative_asymmetry, symmetric_eigenvalues};

/// Tolerance on `Σ π_z = 1` accepted by [`MixtureParams::new`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;
/// Relative tolerance on covariance symmetry.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// The exponential-family component type of a mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Multivariate normal with full covariance.
    Gaussian { dim: usize },
    /// Exponential distribution on `[0, ∞)`, parameterized by its rate.
    Exponential,
    /// Poisson distribution on the nonnegative integers.
    Poisson,
}

impl Family {
    /// Dimension of one observation.
    pub fn dim(&self) -> usize {
        match self {
            Family::Gaussian { dim } => *dim,
            Family::Exponential | Family::Poisson => 1,
        }
    }

    pub fn is_count(&self) -> bool {
        !matches!(self, Family::Gaussian { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::Exponential => "exponential",
            Family::Poisson => "poisson",
        }
    }

    /// Number of scalars one component contributes to [`MixtureParams::flatten`].
    pub fn flat_component_len(&self) -> usize {
        match self {
            Family::Gaussian { dim } => dim + dim * dim,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentParams {
    Gaussian {
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
    },
    Exponential {
        rate: f64,
    },
    Poisson {
        rate: f64,
    },
}

impl ComponentParams {
    pub fn gaussian(mean: Vec<f64>, covariance: DMatrix<f64>) -> Self {
        ComponentParams::Gaussian {
            mean: DVector::from_vec(mean),
            covariance,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ComponentParams::Gaussian { mean, .. } => Family::Gaussian { dim: mean.len() },
            ComponentParams::Exponential { .. } => Family::Exponential,
            ComponentParams::Poisson { .. } => Family::Poisson,
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        match self {
            ComponentParams::Gaussian { mean, covariance } => {
                let d = mean.len();
                if d == 0 || covariance.nrows() != d || covariance.ncols() != d {
                    return Err(Error::invalid(format!(
                        "component {index}: mean of length {d} with {}x{} covariance",
                        covariance.nrows(),
                        covariance.ncols()
                    )));
                }
                if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!("component {index}: non-finite parameter")));
                }
                let asym = relative_asymmetry(covariance);
                if asym > SYMMETRY_TOLERANCE {
                    return Err(Error::invalid(format!(
                        "component {index}: covariance asymmetric ({asym:e})"
                    )));
                }
                let min = symmetric_eigenvalues(covariance)[0];
                if min.is_nan() || min <= 0.0 {
                    return Err(Error::DegenerateCovariance {
                        component: index,
                        min_eigenvalue: min,
                    });
                }
            }
            ComponentParams::Exponential { rate } | ComponentParams::Poisson { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::DegenerateRate {
                        component: index,
                        rate: *rate,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Parameter vector of a `g`-component finite mixture: weights plus per-component parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    weights: Vec<f64>,
    components: Vec<ComponentParams>,
}

impl MixtureParams {
    /// Validates every type invariant (positive weights summing to one, one family,
    /// symmetric positive-definite covariances, positive rates).
    pub fn new(weights: Vec<f64>, components: Vec<ComponentParams>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("a mixture needs at least one component"));
        }
        if weights.len() != components.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if let Some(z) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid(format!("weight {z} is not strictly positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        let family = components[0].family();
        for (z, c) in components.iter().enumerate() {
            if c.family() != family {
                return Err(Error::invalid(format!(
                    "component {z} is {:?}, expected {:?}",
                    c.family(),
                    family
                )));
            }
            c.validate(z)?;
        }
        Ok(Self {
            weights,
            components,
        })
    }

    /// Construction for values produced by the M-step, which has already checked them.
    pub(crate) fn new_unchecked(weights: Vec<f64>, components: Vec<ComponentParams>) -> Self {
        debug_assert_eq!(weights.len(), components.len());
        Self {
            weights,
            components,
        }
    }

    pub fn g(&self) -> usize {
        self.weights.len()
    }

    pub fn family(&self) -> Family {
        self.components[0].family()
    }

    pub fn dim(&self) -> usize {
        self.family().dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[ComponentParams] {
        &self.components
    }

    /// Same components in a different order: component `z` of the result is `self[order[z]]`.
    pub fn permuted(&self, order: &[usize]) -> MixtureParams {
        MixtureParams {
            weights: order.iter().map(|&z| self.weights[z]).collect(),
            components: order.iter().map(|&z| self.components[z].clone()).collect(),
        }
    }

    /// Flat parameter vector: the weights, then for each component its mean followed by the
    /// full row-major covariance (Gaussian) or its rate (count families).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.weights.clone();
        for c in &self.components {
            flatten_component(c, &mut out);
        }
        out
    }

    /// Per-component flat blocks `(π_z, mean, covariance)` / `(π_z, rate)`.
    pub fn component_blocks(&self) -> Vec<Vec<f64>> {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(&w, c)| {
                let mut block = vec![w];
                flatten_component(c, &mut block);
                block
            })
            .collect()
    }

    /// Inverse of [`flatten`](Self::flatten). The result is validated.
    pub fn from_flat(family: Family, g: usize, flat: &[f64]) -> Result<Self> {
        let per = family.flat_component_len();
        if flat.len() != g * (1 + per) {
            return Err(Error::invalid(format!(
                "flat vector of length {} does not match g={g} {family:?}",
                flat.len()
            )));
        }
        let weights = flat[..g].to_vec();
        let components = flat[g..]
            .chunks_exact(per)
            .map(|chunk| match family {
                Family::Gaussian { dim } => ComponentParams::Gaussian {
                    mean: DVector::from_column_slice(&chunk[..dim]),
                    covariance: DMatrix::from_row_slice(dim, dim, &chunk[dim..]),
                },
                Family::Exponential => ComponentParams::Exponential { rate: chunk[0] },
                Family::Poisson => ComponentParams::Poisson { rate: chunk[0] },
            })
            .collect();
        MixtureParams::new(weights, components)
    }

    pub fn to_json(&self) -> ThetaFile {
        ThetaFile {
            weights: self.weights.clone(),
            components: self
                .components
                .iter()
                .map(|c| match c {
                    ComponentParams::Gaussian { mean, covariance } => ComponentFile::Gaussian {
                        mean: mean.iter().copied().collect(),
                        covariance: (0..covariance.nrows())
                            .map(|i| covariance.row(i).iter().copied().collect())
                            .collect(),
                    },
                    ComponentParams::Exponential { rate } => ComponentFile::Exponential { rate: *rate },
                    ComponentParams::Poisson { rate } => ComponentFile::Poisson { rate: *rate },
                })
                .collect(),
        }
    }

    pub fn from_json(file: &ThetaFile) -> Result<Self> {
        let components = file
            .components
            .iter()
            .map(|c| match c {
                ComponentFile::Gaussian { mean, covariance } => {
                    let d = mean.len();
                    if covariance.len() != d || covariance.iter().any(|r| r.len() != d) {
                        return Err(Error::invalid("covariance must be a d x d array of rows"));
                    }
                    let flat: Vec<f64> = covariance.iter().flatten().copied().collect();
                    Ok(ComponentParams::Gaussian {
                        mean: DVector::from_vec(mean.clone()),
                        covariance: DMatrix::from_row_slice(d, d, &flat),
                    })
                }
                ComponentFile::Exponential { rate } => Ok(ComponentParams::Exponential { rate: *rate }),
                ComponentFile::Poisson { rate } => Ok(ComponentParams::Poisson { rate: *rate }),
            })
            .collect::<Result<Vec<_>>>()?;
        MixtureParams::new(file.weights.clone(), components)
    }
}

fn flatten_component(c: &ComponentParams, out: &mut Vec<f64>) {
    match c {
        ComponentParams::Gaussian { mean, covariance } => {
            out.extend(mean.iter());
            let d = mean.len();
            for i in 0..d {
                for j in 0..d {
                    out.push(covariance[(i, j)]);
                }
            }
        }
        ComponentParams::Exponential { rate } | ComponentParams::Poisson { rate } => out.push(*rate),
    }
}

/// JSON representation of a mixture, used for synthetic-θ input files and run outputs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ThetaFile {
    pub weights: Vec<f64>,
    pub components: Vec<ComponentFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ComponentFile {
    Gaussian { mean: Vec<f64>, covariance: Vec<Vec<f64>> },
    Exponential { rate: f64 },
    Poisson { rate: f64 },
}
