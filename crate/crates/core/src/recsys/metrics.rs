use super::knn::{RankScratch, TrainedModel};
use super::RecsysError;
use crate::dataset::InteractionMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Ndcg,
    Recall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub cutoff: usize,
}

impl MetricSpec {
    pub fn ndcg(cutoff: usize) -> Self {
        Self {
            kind: MetricKind::Ndcg,
            cutoff,
        }
    }

    pub fn recall(cutoff: usize) -> Self {
        Self {
            kind: MetricKind::Recall,
            cutoff,
        }
    }

    pub fn validate(&self) -> Result<(), RecsysError> {
        if self.cutoff == 0 {
            return Err(RecsysError::ZeroCutoff);
        }
        Ok(())
    }

    /// Metric value for one user given a ranked list and sorted held-out items.
    pub fn score_user(&self, ranked: &[usize], heldout: &[usize]) -> f64 {
        debug_assert!(!heldout.is_empty());
        let top = &ranked[..ranked.len().min(self.cutoff)];
        match self.kind {
            MetricKind::Ndcg => {
                let dcg: f64 = top
                    .iter()
                    .enumerate()
                    .filter(|(_, j)| heldout.binary_search(j).is_ok())
                    .map(|(r, _)| discount(r + 1))
                    .sum();
                let ideal: f64 = (1..=heldout.len().min(self.cutoff)).map(discount).sum();
                dcg / ideal
            }
            MetricKind::Recall => {
                let hits = top.iter().filter(|j| heldout.binary_search(j).is_ok()).count();
                hits as f64 / heldout.len() as f64
            }
        }
    }
}

impl std::fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            MetricKind::Ndcg => write!(f, "nDCG@{}", self.cutoff),
            MetricKind::Recall => write!(f, "Recall@{}", self.cutoff),
        }
    }
}

impl std::str::FromStr for MetricSpec {
    type Err = RecsysError;

    /// Parses `ndcg@10` or `recall@20`, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || RecsysError::UnknownMetric(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        let (name, cutoff) = lower.split_once('@').ok_or_else(unknown)?;
        let cutoff: usize = cutoff.parse().map_err(|_| unknown())?;
        let spec = match name {
            "ndcg" => Self::ndcg(cutoff),
            "recall" => Self::recall(cutoff),
            _ => return Err(unknown()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Positional discount for 1-based rank `r`.
fn discount(r: usize) -> f64 {
    1.0 / ((r + 1) as f64).log2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub metric: MetricSpec,
    /// Mean of `per_user_values`; 0 when no user could be evaluated.
    pub metric_value: f64,
    pub per_user_values: Vec<f64>,
    pub users_evaluated: usize,
}

/// Scores every user with at least one held-out interaction.
pub fn evaluate(
    model: &TrainedModel,
    train: &InteractionMatrix,
    heldout: &InteractionMatrix,
    metric: &MetricSpec,
) -> Result<EvalResult, RecsysError> {
    metric.validate()?;
    if train.num_users() != heldout.num_users() || train.num_items() != heldout.num_items() {
        return Err(RecsysError::Shape("train and held-out matrices differ in shape".into()));
    }
    if model.num_items() != train.num_items() {
        return Err(RecsysError::Shape(format!(
            "model covers {} items, interactions {}",
            model.num_items(),
            train.num_items()
        )));
    }
    let mut scratch = RankScratch::default();
    let mut ranked = Vec::with_capacity(metric.cutoff);
    let mut per_user = Vec::new();
    for user in 0..heldout.num_users() {
        let held = heldout.profile(user);
        if held.is_empty() {
            continue;
        }
        model.rank_into(train.profile(user), metric.cutoff, &mut scratch, &mut ranked);
        per_user.push(metric.score_user(&ranked, held));
    }
    let users_evaluated = per_user.len();
    let metric_value = if users_evaluated == 0 {
        0.0
    } else {
        per_user.iter().sum::<f64>() / users_evaluated as f64
    };
    Ok(EvalResult {
        metric: *metric,
        metric_value,
        per_user_values: per_user,
        users_evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_names_round_trip() {
        for spec in [MetricSpec::ndcg(10), MetricSpec::recall(3)] {
            assert_eq!(spec.to_string().parse::<MetricSpec>().unwrap(), spec);
        }
        assert!("ndcg@0".parse::<MetricSpec>().is_err());
        assert!("map@5".parse::<MetricSpec>().is_err());
    }

    #[test]
    fn ndcg_perfect_and_rank_three() {
        let m = MetricSpec::ndcg(10);
        assert_eq!(m.score_user(&[4, 1, 2], &[4]), 1.0);
        assert_eq!(m.score_user(&[1, 2, 4], &[4]), 0.5);
        assert_eq!(m.score_user(&[1, 2], &[4]), 0.0);
    }

    #[test]
    fn ndcg_ideal_capped_by_cutoff() {
        let m = MetricSpec::ndcg(2);
        // two hits at ranks 1-2 with five held-out items is still ideal
        assert!((m.score_user(&[0, 1, 2], &[0, 1, 5, 6, 7]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn recall_is_uncapped() {
        let m = MetricSpec::recall(10);
        assert!((m.score_user(&[1, 5, 9], &[1, 2, 9]) - 2.0 / 3.0).abs() < 1e-15);
        let m = MetricSpec::recall(2);
        assert!((m.score_user(&[1, 2, 3], &[1, 2, 3, 4]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_cutoff_rejected() {
        assert!(MetricSpec::ndcg(0).validate().is_err());
    }
}
