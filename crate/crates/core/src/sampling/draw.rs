use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, RefId};

use super::stats::SamplingError;

/// First `n` positions of a seeded Fisher–Yates shuffle of `0..len`.
///
/// Draw `k` consumes the generator identically whatever `n` is, so a shorter
/// draw is always a prefix of a longer one with the same seed.
pub fn permutation_prefix(len: usize, n: usize, seed: u64) -> Vec<usize> {
    assert!(n <= len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<usize> = (0..len).collect();
    for i in 0..n {
        let j = rng.random_range(i..len);
        slots.swap(i, j);
    }
    slots.truncate(n);
    slots
}

/// Uniform sample of `n` ids without replacement, deterministic in
/// (corpus order, `n`, `seed`).
pub fn draw_sample(corpus: &Corpus, n: usize, seed: u64) -> Result<Vec<RefId>, SamplingError> {
    if n > corpus.len() {
        return Err(SamplingError::SampleSize {
            n: n as u64,
            population: corpus.len() as u64,
        });
    }
    Ok(permutation_prefix(corpus.len(), n, seed)
        .into_iter()
        .map(|i| corpus.references()[i].id.clone())
        .collect())
}
