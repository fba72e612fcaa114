use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mixture::{accumulate_rows, MixtureParams, PreparedMixture, SuffStats};

/// Rows per E-step work unit. Fixed so that the reduction order, and therefore every
/// floating-point result, does not depend on the number of worker threads.
pub const CHUNK_ROWS: usize = 512;

/// `N⁻¹ Σ_i s̄(y_i; θ)` over every row of `batch`.
pub fn mean_sbar(batch: &Dataset, theta: &MixtureParams) -> Result<SuffStats> {
    let prepared = theta.prepare()?;
    mean_sbar_prepared(batch, theta, &prepared)
}

pub(crate) fn mean_sbar_prepared(batch: &Dataset, theta: &MixtureParams, prepared: &PreparedMixture) -> Result<SuffStats> {
    if batch.is_empty() {
        return Err(Error::invalid("E-step needs at least one observation"));
    }
    if batch.dim() != theta.dim() {
        return Err(Error::invalid(format!(
            "data dimension {} does not match mixture dimension {}",
            batch.dim(),
            theta.dim()
        )));
    }
    let family = theta.family();
    let d = batch.dim();
    let partials: Vec<SuffStats> = if batch.n() <= CHUNK_ROWS {
        vec![accumulate_rows(prepared, family, batch.rows())?]
    } else {
        batch
            .values()
            .par_chunks(CHUNK_ROWS * d)
            .map(|chunk| accumulate_rows(prepared, family, chunk.chunks_exact(d)))
            .collect::<Result<Vec<_>>>()?
    };
    let mut iter = partials.into_iter();
    let mut total = iter.next().expect("at least one chunk");
    for part in iter {
        total.add_assign(&part);
    }
    total.scale(1.0 / batch.n() as f64);
    Ok(total)
}
