use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, TripLabel};

use super::EvalError;

/// Test-side trip ids of each fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSpec {
    pub k: usize,
    pub seed: u64,
    pub test_ids: Vec<Vec<String>>,
}

impl FoldSpec {
    pub fn test_set(&self, fold: usize) -> HashSet<&str> {
        self.test_ids[fold].iter().map(String::as_str).collect()
    }
}

/// Shuffles drowsy and normal trips separately (seeded) and deals each
/// class round-robin, so every fold gets ⌊n/k⌋ or ⌈n/k⌉ trips of each label.
pub fn stratified_kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldSpec, EvalError> {
    let n_drowsy = dataset.n_drowsy();
    let n_normal = dataset.n_normal();
    if k < 2 {
        return Err(EvalError::InvalidK(k));
    }
    if k > n_drowsy || k > n_normal {
        return Err(EvalError::KTooLarge { k, n_drowsy, n_normal });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_ids = vec![Vec::new(); k];
    for label in [TripLabel::Drowsy, TripLabel::Normal] {
        let mut ids: Vec<&str> = dataset
            .trips()
            .iter()
            .filter(|t| t.label == label)
            .map(|t| t.id.as_str())
            .collect();
        ids.shuffle(&mut rng);
        for (i, id) in ids.into_iter().enumerate() {
            test_ids[i % k].push(id.to_string());
        }
    }
    Ok(FoldSpec { k, seed, test_ids })
}
