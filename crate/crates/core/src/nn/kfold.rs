use std::collections::BTreeMap;
use std::fmt::Display;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SeededRng};

/// Stratified split of `0..labels.len()` into `k` disjoint folds.
///
/// Members of each class are shuffled with a per-class child seed and dealt
/// round-robin; the dealing position carries over from one class to the next
/// so fold sizes stay balanced overall. Every fold holds either the floor or
/// the ceiling of `count / k` members of each class. Indices within a fold
/// are sorted.
pub fn kfold_split<L: Ord + Display>(labels: &[L], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::param(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut classes: BTreeMap<&L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        classes.entry(l).or_default().push(i);
    }
    for (class, members) in &classes {
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                class: class.to_string(),
                count: members.len(),
                k,
            });
        }
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (ci, members) in classes.into_values().enumerate() {
        let mut members = members;
        SeededRng::new(derive_seed(seed, ci as u64)).shuffle(&mut members);
        for idx in members {
            folds[next].push(idx);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn count(fold: &[usize], labels: &[u8], class: u8) -> usize {
        fold.iter().filter(|&&i| labels[i] == class).count()
    }

    #[test]
    fn exact_stratification() {
        let labels: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let folds = kfold_split(&labels, 5, 3).unwrap();
        for f in &folds {
            assert_eq!(count(f, &labels, 0), 10);
            assert_eq!(count(f, &labels, 1), 10);
        }
    }

    #[test]
    fn seven_and_seven_in_two() {
        let labels: Vec<u8> = [0u8; 7].into_iter().chain([1u8; 7]).collect();
        let folds = kfold_split(&labels, 2, 0).unwrap();
        assert_eq!((count(&folds[0], &labels, 0), count(&folds[0], &labels, 1)), (4, 3));
        assert_eq!((count(&folds[1], &labels, 0), count(&folds[1], &labels, 1)), (3, 4));
    }

    #[test]
    fn small_class_is_named() {
        let labels = ["a", "a", "a", "b", "b"];
        match kfold_split(&labels, 3, 0) {
            Err(Error::ClassTooSmall { class, count: 2, k: 3 }) => assert_eq!(class, "b"),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn partition_and_balance(labels in prop::collection::vec(0u8..4, 12..120), k in 2usize..4, seed: u64) {
            prop_assume!((0..4).all(|c| {
                let n = labels.iter().filter(|&&l| l == c).count();
                n == 0 || n >= k
            }));
            let folds = kfold_split(&labels, k, seed).unwrap();
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            for c in 0..4u8 {
                let n = labels.iter().filter(|&&l| l == c).count() as f64;
                for f in &folds {
                    let diff = count(f, &labels, c) as f64 - n / k as f64;
                    prop_assert!(diff.abs() < 1.0);
                }
            }
        }
    }
}
