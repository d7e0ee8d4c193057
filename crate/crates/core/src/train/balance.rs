use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::segment::Label;

/// Keeps every preictal item and a seeded random subset of interictal items of
/// the same size, without replacement. Input order is preserved.
pub fn balance_undersample<T: Clone>(items: &[T], label: impl Fn(&T) -> Label, seed: u64) -> Result<Vec<T>> {
    let interictal: Vec<usize> = (0..items.len()).filter(|&i| label(&items[i]) == Label::Interictal).collect();
    let n_pre = items.len() - interictal.len();
    if n_pre == 0 {
        return Err(Error::MissingClass("preictal"));
    }
    if interictal.is_empty() {
        return Err(Error::MissingClass("interictal"));
    }
    let mut keep = vec![true; items.len()];
    if interictal.len() > n_pre {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        interictal.iter().for_each(|&i| keep[i] = false);
        for j in sample(&mut rng, interictal.len(), n_pre) {
            keep[interictal[j]] = true;
        }
    }
    Ok(items.iter().zip(keep).filter(|(_, k)| *k).map(|(x, _)| x.clone()).collect())
}
