use super::RecsysError;
use crate::dataset::{FeatureMask, InteractionMatrix, ItemFeatureMatrix};
use serde::{Deserialize, Serialize};

/// Item-KNN model: for every item, its top `n_neighbors` most similar items
/// by feature cosine, ordered by descending similarity then ascending index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    n_neighbors: usize,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl TrainedModel {
    pub fn n_neighbors(&self) -> usize {
        self.n_neighbors
    }

    pub fn num_items(&self) -> usize {
        self.neighbors.len()
    }

    /// Retained `(item, similarity)` neighbors of `item`.
    pub fn neighbors(&self, item: usize) -> &[(usize, f64)] {
        &self.neighbors[item]
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.iter().all(Vec::is_empty)
    }

    /// Item scores for a user profile: `score(j) = sum over i in profile of
    /// sim(i, j)`, accumulated in ascending profile order.
    pub fn user_scores(&self, profile: &[usize]) -> Vec<f64> {
        let mut scores = vec![0.0; self.num_items()];
        for &i in profile {
            for &(j, s) in &self.neighbors[i] {
                scores[j] += s;
            }
        }
        scores
    }

    pub(crate) fn rank_into(&self, profile: &[usize], cutoff: usize, scratch: &mut RankScratch, out: &mut Vec<usize>) {
        out.clear();
        let RankScratch { scores, touched } = scratch;
        if scores.len() != self.num_items() {
            *scores = vec![0.0; self.num_items()];
        }
        touched.clear();
        for &i in profile {
            for &(j, s) in &self.neighbors[i] {
                if !touched.contains_flag(j) {
                    touched.mark(j);
                }
                scores[j] += s;
            }
        }
        let mut candidates: Vec<(usize, f64)> = touched
            .items
            .iter()
            .copied()
            .filter(|j| profile.binary_search(j).is_err())
            .map(|j| (j, scores[j]))
            .collect();
        for &j in &touched.items {
            scores[j] = 0.0;
        }
        touched.reset();
        let by_rank = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
        if candidates.len() > cutoff {
            candidates.select_nth_unstable_by(cutoff - 1, by_rank);
            candidates.truncate(cutoff);
        }
        candidates.sort_unstable_by(by_rank);
        out.extend(candidates.into_iter().map(|(j, _)| j));
    }
}

#[derive(Debug, Default)]
pub(crate) struct RankScratch {
    scores: Vec<f64>,
    touched: TouchSet,
}

#[derive(Debug, Default)]
struct TouchSet {
    flags: Vec<bool>,
    items: Vec<usize>,
}

impl TouchSet {
    fn contains_flag(&self, j: usize) -> bool {
        self.flags.get(j).copied().unwrap_or(false)
    }

    fn mark(&mut self, j: usize) {
        if self.flags.len() <= j {
            self.flags.resize(j + 1, false);
        }
        self.flags[j] = true;
        self.items.push(j);
    }

    fn clear(&mut self) {
        self.reset();
    }

    fn reset(&mut self) {
        for &j in &self.items {
            self.flags[j] = false;
        }
        self.items.clear();
    }
}

fn squared_norm(row: &[(usize, f64)], mask: Option<&FeatureMask>) -> f64 {
    let mut acc = 0.0;
    for &(f, v) in row {
        if mask.is_some_and(|m| m.contains(f)) {
            continue;
        }
        acc += v * v;
    }
    acc
}

fn cosine(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    (dot / (norm_a * norm_b)).clamp(-1.0, 1.0)
}

fn top_neighbors(mut row: Vec<(usize, f64)>, n: usize) -> Vec<(usize, f64)> {
    let by_rank = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if row.len() > n {
        row.select_nth_unstable_by(n - 1, by_rank);
        row.truncate(n);
    }
    row.sort_unstable_by(by_rank);
    row
}

/// Sparse dot products `dot(a, b)` for every item pair that shares a
/// nonzero feature, accumulated in ascending feature order.
fn dot_rows(features: &ItemFeatureMatrix) -> Vec<Vec<(usize, f64)>> {
    let n = features.num_items();
    let cols = features.columns();
    let mut acc = vec![0.0f64; n];
    let mut touched = vec![false; n];
    let mut seen = Vec::new();
    (0..n)
        .map(|a| {
            for &(d, va) in features.row(a) {
                for &(b, vb) in &cols[d] {
                    if b == a {
                        continue;
                    }
                    if !touched[b] {
                        touched[b] = true;
                        seen.push(b);
                    }
                    acc[b] += va * vb;
                }
            }
            seen.sort_unstable();
            let row = seen.iter().map(|&b| (b, acc[b])).collect();
            for &b in &seen {
                acc[b] = 0.0;
                touched[b] = false;
            }
            seen.clear();
            row
        })
        .collect()
}

/// Trains Item-KNN from scratch: cosine similarity between every pair of
/// items sharing a nonzero feature, truncated to the top `n_neighbors` per
/// item (ties to the lower index). Self-similarity is excluded.
pub fn train_item_knn(features: &ItemFeatureMatrix, n_neighbors: usize) -> Result<TrainedModel, RecsysError> {
    if n_neighbors == 0 {
        return Err(RecsysError::NoNeighbors);
    }
    let norms: Vec<f64> = (0..features.num_items())
        .map(|i| squared_norm(features.row(i), None).sqrt())
        .collect();
    let neighbors = dot_rows(features)
        .into_iter()
        .enumerate()
        .map(|(a, row)| {
            let sims = row
                .into_iter()
                .map(|(b, dot)| (b, cosine(dot, norms[a], norms[b])))
                .collect();
            top_neighbors(sims, n_neighbors)
        })
        .collect();
    Ok(TrainedModel { n_neighbors, neighbors })
}

/// Cached unmasked dot products from which masked models are re-derived.
///
/// Masking feature `d` only changes dot products between items that both
/// carry `d`, and norms of items carrying `d`; every other value is reused.
/// Recomputed values follow the same summation order as
/// [`train_item_knn`], so the derived model is bit-identical to retraining
/// on the masked matrix.
#[derive(Debug, Clone)]
pub struct SimilarityIndex {
    features: ItemFeatureMatrix,
    norms: Vec<f64>,
    dots: Vec<Vec<(usize, f64)>>,
}

impl SimilarityIndex {
    pub fn new(features: &ItemFeatureMatrix) -> Self {
        let norms = (0..features.num_items())
            .map(|i| squared_norm(features.row(i), None).sqrt())
            .collect();
        Self {
            features: features.clone(),
            norms,
            dots: dot_rows(features),
        }
    }

    pub fn features(&self) -> &ItemFeatureMatrix {
        &self.features
    }

    /// Number of cached item pairs (each direction counted).
    pub fn cached_pairs(&self) -> usize {
        self.dots.iter().map(Vec::len).sum()
    }

    pub fn model_for_mask(&self, mask: &FeatureMask, n_neighbors: usize) -> Result<TrainedModel, RecsysError> {
        if n_neighbors == 0 {
            return Err(RecsysError::NoNeighbors);
        }
        mask.validate(self.features.num_features())?;
        let n = self.features.num_items();
        let affected: Vec<bool> = (0..n)
            .map(|i| self.features.row(i).iter().any(|&(f, _)| mask.contains(f)))
            .collect();
        let norms: Vec<f64> = (0..n)
            .map(|i| {
                if affected[i] {
                    squared_norm(self.features.row(i), Some(mask)).sqrt()
                } else {
                    self.norms[i]
                }
            })
            .collect();
        let neighbors = (0..n)
            .map(|a| {
                let sims = self.dots[a]
                    .iter()
                    .filter_map(|&(b, dot)| {
                        let dot = if affected[a] && affected[b] {
                            masked_dot(self.features.row(a), self.features.row(b), mask)?
                        } else {
                            dot
                        };
                        Some((b, cosine(dot, norms[a], norms[b])))
                    })
                    .collect();
                top_neighbors(sims, n_neighbors)
            })
            .collect();
        Ok(TrainedModel { n_neighbors, neighbors })
    }
}

/// Dot product over unmasked shared features, or `None` when the rows share
/// no unmasked feature.
fn masked_dot(a: &[(usize, f64)], b: &[(usize, f64)], mask: &FeatureMask) -> Option<f64> {
    let (mut x, mut y) = (0, 0);
    let mut acc = 0.0;
    let mut shared = false;
    while x < a.len() && y < b.len() {
        match a[x].0.cmp(&b[y].0) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                if !mask.contains(a[x].0) {
                    acc += a[x].1 * b[y].1;
                    shared = true;
                }
                x += 1;
                y += 1;
            }
        }
    }
    shared.then_some(acc)
}

/// Top-`cutoff` unseen items for `user`, by descending score with ties to
/// the lower item index. Users without a train profile get an empty list.
pub fn recommend(model: &TrainedModel, train: &InteractionMatrix, user: usize, cutoff: usize) -> Vec<usize> {
    let mut out = Vec::new();
    model.rank_into(train.profile(user), cutoff, &mut RankScratch::default(), &mut out);
    out
}
