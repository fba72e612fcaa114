//! Exponential-family finite mixtures: parameters, densities, responsibilities,
//! the conditional-expectation map `s̄` and the M-step map `θ̄`.
//!
//! Three component families are supported: multivariate normal with full
//! covariance, exponential, and Poisson. All density work happens in log space.

mod density;
mod params;
mod sample;
mod stats;

pub use density::PreparedMixture;
pub use params::{
    ComponentFile, ComponentParams, Family, MixtureParams, ThetaFile, SYMMETRY_TOLERANCE, WEIGHT_SUM_TOLERANCE,
};
pub use stats::{ComponentStats, SuffStats, S1_FLOOR};

pub(crate) use stats::accumulate_rows;
