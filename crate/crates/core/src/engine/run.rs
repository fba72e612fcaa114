//! Full runs under an epoch budget.

use std::time::Instant;

use cpu_time::ProcessTime;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::estep::mean_sbar;
use super::sampler::BatchSampler;
use super::schedule::LearningRate;
use super::state::{batch_em_step, EmState};
use super::truncation::TruncationBounds;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mixture::MixtureParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    /// One full E+M sweep per epoch.
    BatchEm,
    /// `⌈n/N⌉` mini-batch iterations per epoch; truncated when `truncation` is set.
    MiniBatch {
        batch_size: usize,
        learning_rate: LearningRate,
        truncation: Option<TruncationBounds>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub epochs: usize,
    /// Maintain a Polyak average of the iterates.
    pub polyak: bool,
    /// Record every iterate instead of only epoch boundaries.
    #[serde(default)]
    pub trace_every_iteration: bool,
}

impl RunConfig {
    /// Number of iterations the configuration performs on `n` observations: the fewest
    /// mini-batches whose combined size reaches `epochs · n`.
    pub fn iterations(&self, n: usize) -> usize {
        match self.algorithm {
            Algorithm::BatchEm => self.epochs,
            Algorithm::MiniBatch { batch_size, .. } => (self.epochs * n).div_ceil(batch_size.max(1)),
        }
    }

    /// Whether iteration `r` completes a pass over `n` points' worth of visits.
    pub fn is_epoch_boundary(&self, n: usize, r: usize) -> bool {
        match self.algorithm {
            Algorithm::BatchEm => true,
            Algorithm::MiniBatch { batch_size, .. } => {
                r == self.iterations(n) || (r * batch_size) / n > ((r - 1) * batch_size) / n
            }
        }
    }

    /// Iterations per epoch, rounded up.
    pub fn iterations_per_epoch(&self, n: usize) -> usize {
        match self.algorithm {
            Algorithm::BatchEm => 1,
            Algorithm::MiniBatch { batch_size, .. } => n.div_ceil(batch_size.max(1)),
        }
    }

    /// Data-point visits per iteration.
    pub fn visits_per_iteration(&self, n: usize) -> usize {
        match self.algorithm {
            Algorithm::BatchEm => n,
            Algorithm::MiniBatch { batch_size, .. } => batch_size,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if n == 0 {
            return Err(Error::invalid("cannot run on an empty data set"));
        }
        if let Algorithm::MiniBatch { batch_size, .. } = self.algorithm {
            BatchSampler::new(n, batch_size)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub theta: MixtureParams,
    pub polyak: Option<MixtureParams>,
    pub truncation_level: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timing {
    pub wall_seconds: f64,
    pub cpu_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub theta: MixtureParams,
    pub polyak: Option<MixtureParams>,
    pub iterations: usize,
    pub data_visits: usize,
    pub truncation_events: u64,
    pub trace: Vec<TracePoint>,
    pub timing: Timing,
}

impl RunRecord {
    /// The Polyak average when present, otherwise the last iterate.
    pub fn estimate(&self) -> &MixtureParams {
        self.polyak.as_ref().unwrap_or(&self.theta)
    }

    /// Equality ignoring timing.
    pub fn same_outcome(&self, other: &RunRecord) -> bool {
        self.theta == other.theta
            && self.polyak == other.polyak
            && self.iterations == other.iterations
            && self.data_visits == other.data_visits
            && self.truncation_events == other.truncation_events
            && self.trace == other.trace
    }
}

/// Runs `config` from `init`. Errors carry the index of the failing iteration.
pub fn run<R: Rng + ?Sized>(data: &Dataset, config: &RunConfig, init: &MixtureParams, rng: &mut R) -> Result<RunRecord> {
    config.validate(data.n())?;
    data.check_finite()?;
    if data.dim() != init.dim() {
        return Err(Error::invalid(format!(
            "data dimension {} does not match initializer dimension {}",
            data.dim(),
            init.dim()
        )));
    }
    let wall = Instant::now();
    let cpu = ProcessTime::now();
    let mut record = match config.algorithm {
        Algorithm::BatchEm => run_batch(data, config, init)?,
        Algorithm::MiniBatch {
            batch_size,
            learning_rate,
            truncation,
        } => run_minibatch(data, config, init, batch_size, learning_rate, truncation, rng)?,
    };
    record.timing = Timing {
        wall_seconds: wall.elapsed().as_secs_f64(),
        cpu_seconds: cpu.elapsed().as_secs_f64(),
    };
    Ok(record)
}

fn run_batch(data: &Dataset, config: &RunConfig, init: &MixtureParams) -> Result<RunRecord> {
    let mut theta = init.clone();
    let mut polyak = config
        .polyak
        .then(|| super::polyak::PolyakAverage::new(init.family(), init.g()));
    let mut trace = Vec::with_capacity(config.epochs);
    for r in 1..=config.epochs {
        theta = batch_em_step(data, &theta).map_err(|e| e.at_iteration(r))?;
        let avg = match polyak.as_mut() {
            Some(acc) => {
                acc.update(&theta);
                Some(acc.current().expect("updated").map_err(|e| e.at_iteration(r))?)
            }
            None => None,
        };
        trace.push(TracePoint {
            iteration: r,
            theta: theta.clone(),
            polyak: avg,
            truncation_level: 0,
        });
    }
    Ok(RunRecord {
        polyak: trace.last().and_then(|t| t.polyak.clone()),
        theta,
        iterations: config.epochs,
        data_visits: config.epochs * data.n(),
        truncation_events: 0,
        trace,
        timing: Timing::default(),
    })
}

fn run_minibatch<R: Rng + ?Sized>(
    data: &Dataset,
    config: &RunConfig,
    init: &MixtureParams,
    batch_size: usize,
    learning_rate: LearningRate,
    truncation: Option<TruncationBounds>,
    rng: &mut R,
) -> Result<RunRecord> {
    let sampler = BatchSampler::new(data.n(), batch_size)?;
    let total = config.iterations(data.n());

    // The first mini-batch initializes the statistic and also drives iteration 1.
    let mut batch = Dataset::from_row_major(0, data.dim(), Vec::new())?;
    sampler.draw_into(data, rng, &mut batch);
    let stats = mean_sbar(&batch, init).map_err(|e| e.at_iteration(0))?;
    let mut state = EmState::new(stats, init.clone());
    if config.polyak {
        state = state.with_polyak();
    }
    if let Some(bounds) = truncation {
        state = state.with_truncation(bounds);
    }

    let mut trace = Vec::with_capacity(if config.trace_every_iteration { total } else { config.epochs });
    for r in 1..=total {
        if r > 1 {
            sampler.draw_into(data, rng, &mut batch);
        }
        let gamma = learning_rate.at(r);
        let step = if truncation.is_some() {
            state
                .truncated_minibatch_step(&batch, gamma, data, batch_size, rng)
                .map(|_| ())
        } else {
            state.minibatch_step(&batch, gamma)
        };
        step.map_err(|e| e.at_iteration(r))?;
        if config.trace_every_iteration || config.is_epoch_boundary(data.n(), r) {
            trace.push(TracePoint {
                iteration: r,
                theta: state.theta().clone(),
                polyak: state.polyak_theta().transpose().map_err(|e| e.at_iteration(r))?,
                truncation_level: state.region().map_or(0, |m| m.level()),
            });
        }
    }
    Ok(RunRecord {
        polyak: state.polyak_theta().transpose()?,
        theta: state.theta().clone(),
        iterations: total,
        data_visits: total * batch_size,
        truncation_events: state.region().map_or(0, |m| m.events()),
        trace,
        timing: Timing::default(),
    })
}
