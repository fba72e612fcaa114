//! Iteration machinery: batch EM, mini-batch EM (online EM at `N = 1`), truncated
//! mini-batch EM, Robbins–Monro step sizes and Polyak averaging.

mod estep;
mod polyak;
mod run;
mod sampler;
mod schedule;
mod state;
mod truncation;

pub use estep::{mean_sbar, CHUNK_ROWS};
pub use polyak::{polyak_update, PolyakAverage};
pub use run::{run, Algorithm, RunConfig, RunRecord, Timing, TracePoint};
pub use sampler::BatchSampler;
pub use schedule::{schedule, LearningRate};
pub use state::{batch_em_step, init_suffstats, reset_stat, EmState, StepOutcome, MAX_RESET_ATTEMPTS};
pub use truncation::{project_into_base, region_contains, TruncationBounds, TruncationRegion};
