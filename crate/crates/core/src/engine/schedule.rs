use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Robbins–Monro step sizes `γ_r = γ₀ · r^(-α)` with `γ₀ ∈ (0, 1)` and `α ∈ (½, 1]`.
///
/// Every term lies in `(0, 1)`, the series diverges and the squared series converges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRate {
    gamma0: f64,
    alpha: f64,
}

impl LearningRate {
    /// `γ₀ = 1 - 10⁻¹⁰`, `α = 0.6`.
    pub const DEFAULT_GAMMA0: f64 = 1.0 - 1e-10;
    pub const DEFAULT_ALPHA: f64 = 0.6;

    pub fn new(gamma0: f64, alpha: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0 < 1.0) {
            return Err(Error::invalid(format!("gamma0 must lie in (0, 1), got {gamma0}")));
        }
        if !(alpha > 0.5 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (1/2, 1], got {alpha}")));
        }
        Ok(Self { gamma0, alpha })
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Step size for iterate `r ≥ 1`.
    pub fn at(&self, r: usize) -> f64 {
        assert!(r >= 1, "learning-rate index starts at 1");
        self.gamma0 * (r as f64).powf(-self.alpha)
    }
}

impl Default for LearningRate {
    fn default() -> Self {
        Self {
            gamma0: Self::DEFAULT_GAMMA0,
            alpha: Self::DEFAULT_ALPHA,
        }
    }
}

pub fn schedule(lr: &LearningRate, r: usize) -> f64 {
    lr.at(r)
}
