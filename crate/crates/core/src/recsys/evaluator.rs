use super::knn::{train_item_knn, SimilarityIndex, TrainedModel};
use super::metrics::{evaluate, EvalResult, MetricSpec};
use super::RecsysError;
use crate::dataset::{FeatureMask, InteractionMatrix, ItemFeatureMatrix};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Which held-out interactions an evaluator scores against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    Validation,
    Test,
}

impl std::fmt::Display for EvalSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvalSplit::Validation => "validation",
            EvalSplit::Test => "test",
        })
    }
}

/// Base-model contract: item features with a column mask in, metric out.
///
/// Implementations must be pure so masks can be evaluated concurrently.
pub trait Evaluator: Sync {
    fn num_features(&self) -> usize;
    fn metric(&self) -> MetricSpec;
    fn split(&self) -> EvalSplit;
    fn evaluate_mask(&self, mask: &FeatureMask) -> Result<EvalResult, RecsysError>;
    /// Stable digest of everything the evaluation depends on.
    fn fingerprint(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskStrategy {
    /// Re-derive masked similarities from cached dot products.
    #[default]
    Incremental,
    /// Retrain from the masked feature matrix every time.
    Retrain,
}

/// Item-KNN evaluator over fixed train and held-out interactions.
#[derive(Debug, Clone)]
pub struct ItemKnnEvaluator {
    features: ItemFeatureMatrix,
    index: Option<SimilarityIndex>,
    train: InteractionMatrix,
    heldout: InteractionMatrix,
    metric: MetricSpec,
    n_neighbors: usize,
    split: EvalSplit,
}

impl ItemKnnEvaluator {
    pub fn new(
        features: &ItemFeatureMatrix,
        train: &InteractionMatrix,
        heldout: &InteractionMatrix,
        metric: MetricSpec,
        n_neighbors: usize,
        split: EvalSplit,
    ) -> Result<Self, RecsysError> {
        Self::with_strategy(
            features,
            train,
            heldout,
            metric,
            n_neighbors,
            split,
            MaskStrategy::Incremental,
        )
    }

    pub fn with_strategy(
        features: &ItemFeatureMatrix,
        train: &InteractionMatrix,
        heldout: &InteractionMatrix,
        metric: MetricSpec,
        n_neighbors: usize,
        split: EvalSplit,
        strategy: MaskStrategy,
    ) -> Result<Self, RecsysError> {
        metric.validate()?;
        if n_neighbors == 0 {
            return Err(RecsysError::NoNeighbors);
        }
        if features.num_items() != train.num_items() {
            return Err(RecsysError::Shape(format!(
                "{} feature rows for {} items",
                features.num_items(),
                train.num_items()
            )));
        }
        if train.num_users() != heldout.num_users() || train.num_items() != heldout.num_items() {
            return Err(RecsysError::Shape("train and held-out matrices differ in shape".into()));
        }
        let index = match strategy {
            MaskStrategy::Incremental => Some(SimilarityIndex::new(features)),
            MaskStrategy::Retrain => None,
        };
        Ok(Self {
            features: features.clone(),
            index,
            train: train.clone(),
            heldout: heldout.clone(),
            metric,
            n_neighbors,
            split,
        })
    }

    pub fn features(&self) -> &ItemFeatureMatrix {
        &self.features
    }

    pub fn train(&self) -> &InteractionMatrix {
        &self.train
    }

    pub fn heldout(&self) -> &InteractionMatrix {
        &self.heldout
    }

    pub fn n_neighbors(&self) -> usize {
        self.n_neighbors
    }

    pub fn model_for_mask(&self, mask: &FeatureMask) -> Result<TrainedModel, RecsysError> {
        match &self.index {
            Some(index) => index.model_for_mask(mask, self.n_neighbors),
            None => {
                mask.validate(self.features.num_features())?;
                train_item_knn(&self.features.masked(mask), self.n_neighbors)
            }
        }
    }
}

impl Evaluator for ItemKnnEvaluator {
    fn num_features(&self) -> usize {
        self.features.num_features()
    }

    fn metric(&self) -> MetricSpec {
        self.metric
    }

    fn split(&self) -> EvalSplit {
        self.split
    }

    fn evaluate_mask(&self, mask: &FeatureMask) -> Result<EvalResult, RecsysError> {
        let model = self.model_for_mask(mask)?;
        evaluate(&model, &self.train, &self.heldout, &self.metric)
    }

    fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"item-knn-v1");
        h.update((self.n_neighbors as u64).to_le_bytes());
        h.update(format!("{}:{}", self.metric, self.split).as_bytes());
        h.update((self.features.num_items() as u64).to_le_bytes());
        h.update((self.features.num_features() as u64).to_le_bytes());
        for (i, f, v) in self.features.triplets() {
            h.update((i as u64).to_le_bytes());
            h.update((f as u64).to_le_bytes());
            h.update(v.to_le_bytes());
        }
        for m in [&self.train, &self.heldout] {
            h.update((m.num_users() as u64).to_le_bytes());
            for (u, i) in m.pairs() {
                h.update((u as u64).to_le_bytes());
                h.update((i as u64).to_le_bytes());
            }
        }
        hex(&h.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reference masked evaluation: zero the masked columns, retrain Item-KNN
/// from scratch and evaluate.
pub fn evaluate_with_mask(
    features: &ItemFeatureMatrix,
    mask: &FeatureMask,
    train: &InteractionMatrix,
    heldout: &InteractionMatrix,
    metric: &MetricSpec,
    n_neighbors: usize,
) -> Result<f64, RecsysError> {
    mask.validate(features.num_features())?;
    let model = train_item_knn(&features.masked(mask), n_neighbors)?;
    Ok(evaluate(&model, train, heldout, metric)?.metric_value)
}
