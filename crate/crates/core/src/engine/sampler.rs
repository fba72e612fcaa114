use rand::Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Uniform sampling of `N` row indices with replacement.
#[derive(Debug, Clone, Copy)]
pub struct BatchSampler {
    n: usize,
    batch_size: usize,
}

impl BatchSampler {
    pub fn new(n: usize, batch_size: usize) -> Result<Self> {
        if batch_size == 0 || batch_size > n {
            return Err(Error::invalid(format!("batch size {batch_size} must lie in [1, {n}]")));
        }
        Ok(Self { n, batch_size })
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn draw_indices<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        (0..self.batch_size).map(|_| rng.random_range(0..self.n)).collect()
    }

    /// Draws the indices first, then copies the rows into `batch`.
    pub fn draw_into<R: Rng + ?Sized>(&self, source: &Dataset, rng: &mut R, batch: &mut Dataset) {
        debug_assert_eq!(source.n(), self.n);
        let indices = self.draw_indices(rng);
        batch.gather_from(source, &indices);
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn indices_in_range_and_reproducible() {
        let s = BatchSampler::new(17, 40).err();
        assert!(s.is_some());
        let s = BatchSampler::new(17, 9).unwrap();
        let a = s.draw_indices(&mut ChaCha8Rng::seed_from_u64(5));
        let b = s.draw_indices(&mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        assert_eq!(a.len(), 9);
        assert!(a.iter().all(|&i| i < 17));
    }

    #[test]
    fn gathers_rows() {
        let data = Dataset::from_rows(&[[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]]).unwrap();
        let s = BatchSampler::new(3, 5).err();
        assert!(s.is_some());
        let s = BatchSampler::new(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let idx = s.draw_indices(&mut rng.clone());
        let mut batch = Dataset::from_row_major(0, 2, Vec::new()).unwrap();
        s.draw_into(&data, &mut rng, &mut batch);
        assert_eq!(batch, data.select(&idx));
    }
}
