//! Interaction and item-feature data: loading, splitting, negative sampling
//! and synthetic corpus generation.

mod features;
mod interactions;
mod sampling;
mod split;
mod synth;

pub use features::{load_features, FeatureMask, ItemFeatureMatrix};
pub use interactions::{load_interactions, IdMap, InteractionMatrix, LoadedInteractions};
pub use sampling::{negative_sample, LabeledSample};
pub use split::{split, SplitBundle, SplitSpec};
pub use synth::{generate_corpus, synthesize_corpus, write_corpus, CorpusManifest, SynthParams, SyntheticCorpus};

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("empty dataset: {0}")]
    Empty(PathBuf),
    #[error("unknown item id {0:?}")]
    UnknownItem(String),
    #[error("index ({row}, {col}) out of bounds for {rows}x{cols}")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("duplicate feature cell (item {item}, feature {feature})")]
    DuplicateCell { item: usize, feature: usize },
    #[error("non-finite feature value at (item {item}, feature {feature})")]
    NonFinite { item: usize, feature: usize },
    #[error("invalid split spec: {0}")]
    InvalidSplit(String),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("manifest serialization failed: {0}")]
    Manifest(#[from] serde_json::Error),
}

/// Train/validation/test interactions plus the item features they share.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub train: InteractionMatrix,
    pub validation: InteractionMatrix,
    pub test: InteractionMatrix,
    pub features: ItemFeatureMatrix,
    /// Present for synthetic corpora.
    pub manifest: Option<CorpusManifest>,
}

impl DatasetBundle {
    pub fn from_split(split: SplitBundle, features: ItemFeatureMatrix) -> Self {
        Self {
            train: split.train,
            validation: split.validation,
            test: split.test,
            features,
            manifest: None,
        }
    }

    pub fn num_features(&self) -> usize {
        self.features.num_features()
    }
}
