use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};

use super::params::{Family, MixtureParams};
use crate::data::Dataset;
use crate::error::{Error, Result};

impl MixtureParams {
    /// Draws `n` i.i.d. observations and their generating component labels.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<(Dataset, Vec<usize>)> {
        if n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        let prepared = self.prepare()?;
        let picker = WeightedIndex::new(self.weights()).map_err(|e| Error::invalid(e.to_string()))?;
        let d = self.dim();
        let mut values = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        let mut z_buf = vec![0.0; d];
        for _ in 0..n {
            let z = picker.sample(rng);
            labels.push(z);
            match self.family() {
                Family::Gaussian { .. } => {
                    let (mean, chol) = prepared.gaussian_factor(z).expect("gaussian component");
                    for v in z_buf.iter_mut() {
                        *v = StandardNormal.sample(rng);
                    }
                    for i in 0..d {
                        let row = &chol[i * d..=i * d + i];
                        let dot: f64 = row.iter().zip(&z_buf).map(|(l, u)| l * u).sum();
                        values.push(mean[i] + dot);
                    }
                }
                Family::Exponential => {
                    let rate = prepared.rate(z).expect("rate");
                    let dist = Exp::new(rate).map_err(|e| Error::NumericDomain(e.to_string()))?;
                    values.push(dist.sample(rng));
                }
                Family::Poisson => {
                    let rate = prepared.rate(z).expect("rate");
                    let dist = Poisson::new(rate).map_err(|e| Error::NumericDomain(e.to_string()))?;
                    values.push(dist.sample(rng));
                }
            }
        }
        Ok((Dataset::from_row_major(n, d, values)?, labels))
    }
}
