use crate::error::Result;
use crate::mixture::{Family, MixtureParams};

/// Running arithmetic mean of parameter iterates, kept on the flattened parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyakAverage {
    family: Family,
    g: usize,
    count: usize,
    mean: Vec<f64>,
}

impl PolyakAverage {
    pub fn new(family: Family, g: usize) -> Self {
        Self {
            family,
            g,
            count: 0,
            mean: Vec::new(),
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `θ_A ← i⁻¹ [(i - 1) θ_A + θ_i]`.
    pub fn update(&mut self, theta: &MixtureParams) {
        let flat = theta.flatten();
        self.count += 1;
        if self.count == 1 {
            self.mean = flat;
            return;
        }
        let i = self.count as f64;
        for (a, x) in self.mean.iter_mut().zip(flat) {
            *a = ((i - 1.0) * *a + x) / i;
        }
    }

    /// The current average, or `None` before the first update.
    pub fn current(&self) -> Option<Result<MixtureParams>> {
        (self.count > 0).then(|| MixtureParams::from_flat(self.family, self.g, &self.mean))
    }
}

/// One step of the iterative running mean. `previous` is ignored when `i == 1`.
pub fn polyak_update(previous: &MixtureParams, new: &MixtureParams, i: usize) -> Result<MixtureParams> {
    assert!(i >= 1, "averaging index starts at 1");
    if i == 1 {
        return Ok(new.clone());
    }
    let k = i as f64;
    let avg: Vec<f64> = previous
        .flatten()
        .into_iter()
        .zip(new.flatten())
        .map(|(a, x)| ((k - 1.0) * a + x) / k)
        .collect();
    MixtureParams::from_flat(new.family(), new.g(), &avg)
}
