use super::{DatasetError, InteractionMatrix};
use crate::seed::rng_for;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        for (name, f) in [
            ("test_fraction", self.test_fraction),
            ("validation_fraction", self.validation_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(DatasetError::InvalidSplit(format!(
                    "{name} must lie strictly between 0 and 1, got {f}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBundle {
    pub train: InteractionMatrix,
    pub validation: InteractionMatrix,
    pub test: InteractionMatrix,
}

/// Number of interactions held out of `n`: `ceil(fraction * n)`, but at
/// least one interaction always stays behind.
fn holdout_count(n: usize, fraction: f64) -> usize {
    if n <= 1 {
        return 0;
    }
    // 1e-9 guards against products like 0.1 * 30 = 3.0000000000000004
    let raw = (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize;
    raw.min(n - 1)
}

/// Per-user stratified holdout: test first, then validation carved from
/// what remains. Users with a single interaction keep it in train.
pub fn split(interactions: &InteractionMatrix, spec: &SplitSpec) -> Result<SplitBundle, DatasetError> {
    spec.validate()?;
    let n_users = interactions.num_users();
    let mut train = Vec::with_capacity(n_users);
    let mut validation = Vec::with_capacity(n_users);
    let mut test = Vec::with_capacity(n_users);
    for user in 0..n_users {
        let mut items = interactions.profile(user).to_vec();
        let mut rng = rng_for(spec.seed, user as u64);
        items.shuffle(&mut rng);

        let n_test = holdout_count(items.len(), spec.test_fraction);
        let n_val = holdout_count(items.len() - n_test, spec.validation_fraction);
        let mut t = items[..n_test].to_vec();
        let mut v = items[n_test..n_test + n_val].to_vec();
        let mut r = items[n_test + n_val..].to_vec();
        t.sort_unstable();
        v.sort_unstable();
        r.sort_unstable();
        test.push(t);
        validation.push(v);
        train.push(r);
    }
    let n_items = interactions.num_items();
    Ok(SplitBundle {
        train: InteractionMatrix::from_profiles(n_items, train),
        validation: InteractionMatrix::from_profiles(n_items, validation),
        test: InteractionMatrix::from_profiles(n_items, test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_user(n: usize) -> InteractionMatrix {
        InteractionMatrix::from_pairs(1, n, (0..n).map(|i| (0, i))).unwrap().0
    }

    #[test]
    fn ten_interactions_split_six_two_two() {
        let spec = SplitSpec {
            seed: 3,
            ..Default::default()
        };
        let s = split(&single_user(10), &spec).unwrap();
        assert_eq!(s.test.nnz(), 2);
        assert_eq!(s.validation.nnz(), 2);
        assert_eq!(s.train.nnz(), 6);
    }

    #[test]
    fn single_interaction_stays_in_train() {
        let s = split(&single_user(1), &SplitSpec::default()).unwrap();
        assert_eq!((s.train.nnz(), s.validation.nnz(), s.test.nnz()), (1, 0, 0));
    }

    #[test]
    fn deterministic_under_seed() {
        let m = single_user(40);
        let spec = SplitSpec {
            seed: 11,
            ..Default::default()
        };
        assert_eq!(split(&m, &spec).unwrap(), split(&m, &spec).unwrap());
    }

    #[test]
    fn rejects_degenerate_fractions() {
        let spec = SplitSpec {
            test_fraction: 1.0,
            ..Default::default()
        };
        assert!(split(&single_user(3), &spec).is_err());
        let spec = SplitSpec {
            validation_fraction: 0.0,
            ..Default::default()
        };
        assert!(split(&single_user(3), &spec).is_err());
    }

    #[test]
    fn holdout_never_empties_train() {
        assert_eq!(holdout_count(2, 0.9), 1);
        assert_eq!(holdout_count(30, 0.1), 3);
        assert_eq!(holdout_count(8, 0.2), 2);
    }

    proptest! {
        #[test]
        fn split_partitions_interactions(
            pairs in prop::collection::vec((0usize..12, 0usize..30), 1..200),
            seed in any::<u64>(),
            tf in 0.05f64..0.6,
            vf in 0.05f64..0.6,
        ) {
            let (m, _) = InteractionMatrix::from_pairs(12, 30, pairs).unwrap();
            let s = split(&m, &SplitSpec { test_fraction: tf, validation_fraction: vf, seed }).unwrap();
            prop_assert_eq!(s.train.nnz() + s.validation.nnz() + s.test.nnz(), m.nnz());
            for (u, i) in m.pairs() {
                let hits = [&s.train, &s.validation, &s.test].iter().filter(|x| x.contains(u, i)).count();
                prop_assert_eq!(hits, 1);
            }
            for u in 0..12 {
                if !m.profile(u).is_empty() {
                    prop_assert!(!s.train.profile(u).is_empty());
                }
            }
        }
    }
}
