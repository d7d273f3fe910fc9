//! QUBO-Boosting with single-feature Item-KNN weak learners.

use super::{CoefficientMatrix, QuboError};
use crate::dataset::{FeatureMask, InteractionMatrix, ItemFeatureMatrix, LabeledSample};
use crate::par::Execution;
use crate::recsys::{train_item_knn, RecsysError};

/// `{-1, +1}` predictions, one row per feature, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakPredictions {
    num_features: usize,
    num_samples: usize,
    values: Vec<i8>,
}

impl WeakPredictions {
    pub fn from_rows(rows: Vec<Vec<i8>>) -> Result<Self, QuboError> {
        let num_samples = rows.first().map_or(0, Vec::len);
        if rows
            .iter()
            .any(|r| r.len() != num_samples || r.iter().any(|&v| v != 1 && v != -1))
        {
            return Err(QuboError::Format("weak predictions must be a +/-1 matrix".into()));
        }
        Ok(Self {
            num_features: rows.len(),
            num_samples,
            values: rows.concat(),
        })
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn row(&self, feature: usize) -> &[i8] {
        &self.values[feature * self.num_samples..(feature + 1) * self.num_samples]
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// For each feature, an Item-KNN trained on that feature alone scores every
/// labeled `(user, item)`; scores above the feature's median predict +1.
pub fn single_feature_predictions(
    features: &ItemFeatureMatrix,
    train: &InteractionMatrix,
    samples: &[LabeledSample],
    n_neighbors: usize,
    exec: Execution,
) -> Result<WeakPredictions, RecsysError> {
    let n = features.num_features();
    let mut by_user: Vec<usize> = (0..samples.len()).collect();
    by_user.sort_by_key(|&t| (samples[t].user, t));

    let rows = exec.map_range(n, |f| -> Result<Vec<i8>, RecsysError> {
        let mask = FeatureMask::complement_of(&[f], n);
        let model = train_item_knn(&features.masked(&mask), n_neighbors)?;
        let mut scores = vec![0.0; samples.len()];
        let mut current: Option<(usize, Vec<f64>)> = None;
        for &t in &by_user {
            let user = samples[t].user;
            if current.as_ref().map(|c| c.0) != Some(user) {
                current = Some((user, model.user_scores(train.profile(user))));
            }
            scores[t] = current.as_ref().map_or(0.0, |c| c.1[samples[t].item]);
        }
        let threshold = median(&scores);
        Ok(scores.iter().map(|&s| if s > threshold { 1 } else { -1 }).collect())
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(WeakPredictions::from_rows(rows).expect("predictions are +/-1 by construction"))
}

/// `Q_ii = regularizer - (2/N) sum_t s_i(t) y(t)`,
/// `Q_ij = (1/N) sum_t s_i(t) s_j(t)`, with labels mapped to `{-1, +1}`.
pub fn build_boosting(
    weak: &WeakPredictions,
    samples: &[LabeledSample],
    regularizer: f64,
) -> Result<CoefficientMatrix, QuboError> {
    if weak.num_samples() != samples.len() {
        return Err(QuboError::Dimension {
            expected: samples.len(),
            actual: weak.num_samples(),
        });
    }
    if samples.is_empty() {
        return Err(QuboError::TooFewSamples { needed: 1, got: 0 });
    }
    let n_samples = samples.len() as f64;
    let y: Vec<i64> = samples.iter().map(|s| 2 * s.label as i64 - 1).collect();
    let n = weak.num_features();
    let mut q = CoefficientMatrix::zeros(n);
    for i in 0..n {
        let si = weak.row(i);
        let agree: i64 = si.iter().zip(&y).map(|(&s, &l)| s as i64 * l).sum();
        q.set(i, i, regularizer - 2.0 * agree as f64 / n_samples);
        for j in i + 1..n {
            let sj = weak.row(j);
            let corr: i64 = si.iter().zip(sj).map(|(&a, &b)| (a * b) as i64).sum();
            q.set(i, j, corr as f64 / n_samples);
        }
    }
    Ok(q)
}
