//! Single iterations of batch, mini-batch and truncated mini-batch EM.

use rand::Rng;

use super::estep::mean_sbar;
use super::polyak::PolyakAverage;
use super::sampler::BatchSampler;
use super::truncation::{project_into_base, TruncationBounds, TruncationRegion};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mixture::{MixtureParams, SuffStats};

/// Fresh mini-batches tried by a reset before falling back to projecting the last
/// accepted parameters.
pub const MAX_RESET_ATTEMPTS: usize = 10;

/// One full EM sweep: `θ̄(n⁻¹ Σ s̄(y_i; θ))`.
pub fn batch_em_step(data: &Dataset, theta: &MixtureParams) -> Result<MixtureParams> {
    mean_sbar(data, theta)?.theta_bar()
}

/// Initial statistic `s⁽⁰⁾ = N⁻¹ Σ s̄(Y_i; θ⁽⁰⁾)` over a first mini-batch.
pub fn init_suffstats(batch: &Dataset, theta0: &MixtureParams) -> Result<SuffStats> {
    mean_sbar(batch, theta0)
}

/// Whether a truncated step kept its proposal or reset into `K_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    Reset,
}

/// Running state of the stochastic algorithms.
///
/// After every completed step `theta == θ̄(stats)`; at iteration 0 `theta` is the initializer.
#[derive(Debug, Clone)]
pub struct EmState {
    stats: SuffStats,
    theta: MixtureParams,
    iteration: usize,
    polyak: Option<PolyakAverage>,
    region: Option<TruncationRegion>,
}

impl EmState {
    pub fn new(stats: SuffStats, theta: MixtureParams) -> Self {
        Self {
            stats,
            theta,
            iteration: 0,
            polyak: None,
            region: None,
        }
    }

    /// State at `r = 0` with `s⁽⁰⁾` from [`init_suffstats`].
    pub fn initialize(batch: &Dataset, theta0: MixtureParams) -> Result<Self> {
        let stats = init_suffstats(batch, &theta0)?;
        Ok(Self::new(stats, theta0))
    }

    pub fn with_polyak(mut self) -> Self {
        self.polyak = Some(PolyakAverage::new(self.theta.family(), self.theta.g()));
        self
    }

    pub fn with_truncation(mut self, bounds: TruncationBounds) -> Self {
        self.region = Some(TruncationRegion::new(bounds));
        self
    }

    pub fn stats(&self) -> &SuffStats {
        &self.stats
    }

    pub fn theta(&self) -> &MixtureParams {
        &self.theta
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn region(&self) -> Option<&TruncationRegion> {
        self.region.as_ref()
    }

    pub fn polyak(&self) -> Option<&PolyakAverage> {
        self.polyak.as_ref()
    }

    /// Polyak average of the iterates so far, if averaging is enabled and a step was taken.
    pub fn polyak_theta(&self) -> Option<Result<MixtureParams>> {
        self.polyak.as_ref().and_then(PolyakAverage::current)
    }

    fn commit(&mut self, stats: SuffStats, theta: MixtureParams) {
        self.stats = stats;
        self.theta = theta;
        self.iteration += 1;
        if let Some(acc) = self.polyak.as_mut() {
            acc.update(&self.theta);
        }
    }

    fn proposal(&self, batch: &Dataset, gamma: f64) -> Result<SuffStats> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(format!("step size {gamma} outside [0, 1]")));
        }
        let target = mean_sbar(batch, &self.theta)?;
        Ok(self.stats.blend(&target, gamma))
    }

    /// `s ← (1-γ) s + γ N⁻¹ Σ s̄(Y_i; θ)`, `θ ← θ̄(s)`. On error the state is unchanged.
    pub fn minibatch_step(&mut self, batch: &Dataset, gamma: f64) -> Result<()> {
        let stats = self.proposal(batch, gamma)?;
        let theta = stats.theta_bar()?;
        self.commit(stats, theta);
        Ok(())
    }

    /// Truncated step: the proposal is accepted when `θ̄(s̃)` exists and lies in `K_m`;
    /// otherwise the statistic is reset by [`reset_stat`] and `m` increments.
    ///
    /// `source` and `batch_size` feed the fresh mini-batches a reset draws with `rng`.
    pub fn truncated_minibatch_step<R: Rng + ?Sized>(
        &mut self,
        batch: &Dataset,
        gamma: f64,
        source: &Dataset,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<StepOutcome> {
        let region = self
            .region
            .clone()
            .ok_or_else(|| Error::invalid("truncated step on a state without a truncation region"))?;
        let proposal = self.proposal(batch, gamma)?;
        match proposal.theta_bar() {
            Ok(theta) if region.contains(&theta) => {
                self.commit(proposal, theta);
                Ok(StepOutcome::Accepted)
            }
            Ok(_) => self.reset(source, batch_size, rng),
            Err(e) if e.is_degenerate_estimate() => self.reset(source, batch_size, rng),
            Err(e) => Err(e),
        }
    }

    fn reset<R: Rng + ?Sized>(&mut self, source: &Dataset, batch_size: usize, rng: &mut R) -> Result<StepOutcome> {
        let bounds = self.region.as_ref().expect("checked by caller").bounds();
        let stats = reset_stat(&self.theta, source, batch_size, &bounds, rng)?;
        let theta = stats.theta_bar()?;
        self.region.as_mut().expect("checked by caller").record_reset();
        self.commit(stats, theta);
        Ok(StepOutcome::Reset)
    }
}

/// Reset statistic whose image under `θ̄` lies in `K_0`.
///
/// Draws a fresh mini-batch, maps its mean `s̄` at the last accepted `θ` to parameters and
/// projects those into `K_0` (weights floored at `1/c₁`, means clipped to `[-c₂, c₂]`,
/// eigenvalues clipped to `[1/c₃, c₃]`); the statistic is rebuilt from the projection.
/// When no fresh batch yields well-defined parameters after [`MAX_RESET_ATTEMPTS`] draws,
/// the last accepted `θ` itself is projected.
pub fn reset_stat<R: Rng + ?Sized>(
    last_accepted: &MixtureParams,
    source: &Dataset,
    batch_size: usize,
    bounds: &TruncationBounds,
    rng: &mut R,
) -> Result<SuffStats> {
    let sampler = BatchSampler::new(source.n(), batch_size)?;
    let mut batch = Dataset::from_row_major(0, source.dim(), Vec::new())?;
    let mut candidate = None;
    for _ in 0..MAX_RESET_ATTEMPTS {
        sampler.draw_into(source, rng, &mut batch);
        match mean_sbar(&batch, last_accepted).and_then(|s| s.theta_bar()) {
            Ok(theta) => {
                candidate = Some(theta);
                break;
            }
            Err(e) if e.is_degenerate_estimate() => continue,
            Err(e) => return Err(e),
        }
    }
    let base = candidate.as_ref().unwrap_or(last_accepted);
    let projected = project_into_base(base, bounds)?;
    let stats = SuffStats::from_params(&projected);
    match stats.theta_bar() {
        Ok(theta) if TruncationRegion::new(*bounds).contains(&theta) => Ok(stats),
        _ => Err(Error::UnrecoverableTruncation(
            "projected statistic does not map back into K_0".into(),
        )),
    }
}
