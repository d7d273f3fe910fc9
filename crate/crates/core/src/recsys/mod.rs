//! Item-KNN base model, ranking metrics and the evaluator contract used by
//! the counterfactual engine.

mod evaluator;
mod knn;
mod metrics;

pub use evaluator::{evaluate_with_mask, EvalSplit, Evaluator, ItemKnnEvaluator, MaskStrategy};
pub use knn::{recommend, train_item_knn, SimilarityIndex, TrainedModel};
pub use metrics::{evaluate, EvalResult, MetricKind, MetricSpec};

#[derive(Debug, thiserror::Error)]
pub enum RecsysError {
    #[error("n_neighbors must be >= 1")]
    NoNeighbors,
    #[error("metric cutoff must be >= 1")]
    ZeroCutoff,
    #[error("unknown metric {0:?}; expected ndcg@N or recall@N")]
    UnknownMetric(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid mask: {0}")]
    Mask(#[from] crate::dataset::DatasetError),
}
