//! Batch, online, mini-batch and truncated mini-batch EM for finite mixtures of
//! exponential-family distributions (multivariate normal, exponential, Poisson),
//! with the evaluation metrics, data pipeline and experiment driver used to
//! compare the variants.
//!
//! The stochastic algorithms update a running sufficient statistic
//! `s ← (1 - γ_r) s + γ_r · mean(s̄(Y; θ))` over uniformly resampled mini-batches
//! and map it back to parameters with the closed-form M-step `θ = θ̄(s)`.

pub mod data;
pub mod engine;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod linalg;
pub mod mixture;
pub mod pipeline;

pub use data::Dataset;
pub use engine::{
    batch_em_step, polyak_update, region_contains, run, schedule, Algorithm, EmState, LearningRate, RunConfig,
    RunRecord, TruncationBounds, TruncationRegion,
};
pub use error::{Error, Result};
pub use eval::{adjusted_rand_index, dataset_loglik, map_labels, squared_error, MetricReport};
pub use mixture::{ComponentParams, Family, MixtureParams, PreparedMixture, SuffStats};
