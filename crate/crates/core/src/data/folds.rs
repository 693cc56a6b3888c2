use rand::seq::SliceRandom;
use serde::Serialize;

use super::DataError;
use crate::nn::{derive_seed, rng_from_seed};

/// Fraction of each fold's training portion held out for validation.
const VALIDATION_FRACTION: f64 = 0.1;

/// Disjoint index sets of one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fold plans always serialize")
    }
}

fn by_class(labels: &[usize], indices: impl IntoIterator<Item = usize>) -> Vec<Vec<usize>> {
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); classes];
    for i in indices {
        out[labels[i]].push(i);
    }
    out
}

/// Seeded stratified `k`-fold split of graphs with class `labels[i]`.
///
/// Each class is shuffled and dealt round-robin into the test folds, continuing
/// from where the previous class stopped, so every fold holds within one sample
/// of each class's share. Inside each fold, a stratified tenth of the training
/// portion becomes the validation set.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan, DataError> {
    assert!(k >= 2, "k-fold needs at least two folds");
    let mut rng = rng_from_seed(derive_seed(seed, &[0]));
    let mut classes = by_class(labels, 0..labels.len());
    for (class, members) in classes.iter().enumerate() {
        if members.len() < k {
            return Err(DataError::TooFewSamples {
                class,
                count: members.len(),
                k,
            });
        }
    }
    let mut tests = vec![Vec::new(); k];
    let mut next = 0;
    for members in &mut classes {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            tests[next].push(i);
            next = (next + 1) % k;
        }
    }

    let folds = tests
        .iter()
        .enumerate()
        .map(|(f, test)| {
            let mut in_test = vec![false; labels.len()];
            test.iter().for_each(|&i| in_test[i] = true);
            let mut rng = rng_from_seed(derive_seed(seed, &[1, f as u64]));
            let mut train = Vec::new();
            let mut validation = Vec::new();
            for mut members in by_class(labels, (0..labels.len()).filter(|&i| !in_test[i])) {
                members.shuffle(&mut rng);
                let held = if members.len() >= 2 {
                    ((members.len() as f64 * VALIDATION_FRACTION).round() as usize).max(1)
                } else {
                    0
                };
                validation.extend_from_slice(&members[..held]);
                train.extend_from_slice(&members[held..]);
            }
            let mut test = test.clone();
            train.sort_unstable();
            validation.sort_unstable();
            test.sort_unstable();
            Fold {
                train,
                validation,
                test,
            }
        })
        .collect();
    Ok(FoldPlan { k, seed, folds })
}
