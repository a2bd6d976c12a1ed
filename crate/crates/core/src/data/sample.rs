use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sorted indices of a uniform `n`-of-`len` sample without replacement.
pub fn subsample_indices(len: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n > len {
        return Err(Error::invalid(format!(
            "cannot sample {n} items from a corpus of {len}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, len, n).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Uniform sample without replacement that keeps the original order.
pub fn subsample<T: Clone>(items: &[T], n: usize, seed: u64) -> Result<Vec<T>> {
    Ok(subsample_indices(items.len(), n, seed)?
        .into_iter()
        .map(|i| items[i].clone())
        .collect())
}
