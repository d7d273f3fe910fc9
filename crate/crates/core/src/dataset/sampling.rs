use super::{DatasetError, InteractionMatrix};
use crate::seed::rng_for;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub user: usize,
    pub item: usize,
    pub label: u8,
}

/// Emits every positive with label 1 and, for each positive, `ratio`
/// distinct items the user has not interacted with, labeled 0.
///
/// Users that interacted with every item contribute positives only.
pub fn negative_sample(
    interactions: &InteractionMatrix,
    ratio: usize,
    seed: u64,
) -> Result<Vec<LabeledSample>, DatasetError> {
    if ratio == 0 {
        return Err(DatasetError::InvalidParams(
            "negative sampling ratio must be >= 1".into(),
        ));
    }
    let n_items = interactions.num_items();
    let mut out = Vec::with_capacity(interactions.nnz() * (ratio + 1));
    for user in 0..interactions.num_users() {
        let profile = interactions.profile(user);
        if profile.is_empty() {
            continue;
        }
        let candidates: Vec<usize> = (0..n_items).filter(|i| profile.binary_search(i).is_err()).collect();
        if candidates.is_empty() {
            log::warn!("user {user} interacted with every item; no negatives sampled");
        } else if candidates.len() < ratio {
            log::warn!(
                "user {user} has only {} non-interacted items for ratio {ratio}",
                candidates.len()
            );
        }
        let per_positive = ratio.min(candidates.len());
        let mut rng = rng_for(seed, user as u64);
        for &item in profile {
            out.push(LabeledSample { user, item, label: 1 });
            for k in rand::seq::index::sample(&mut rng, candidates.len(), per_positive) {
                out.push(LabeledSample {
                    user,
                    item: candidates[k],
                    label: 0,
                });
            }
        }
    }
    Ok(out)
}
