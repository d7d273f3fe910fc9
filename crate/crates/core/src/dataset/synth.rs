//! Planted-signal corpus generator.
//!
//! A random subset of features is informative: every user prefers one or two
//! of them, and interactions are drawn with probability proportional to how
//! strongly an item carries the user's preferred features. The remaining
//! features are noise placed independently of interactions.

use super::{split, DatasetBundle, DatasetError, InteractionMatrix, ItemFeatureMatrix, SplitSpec};
use crate::seed::rng_for;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

const STREAM_INFORMATIVE: u64 = 1;
const STREAM_FEATURES: u64 = 2;
const STREAM_USERS: u64 = 3;
const STREAM_FILL: u64 = 4;

/// Baseline sampling weight of an item carrying none of a user's preferred features.
const BACKGROUND_WEIGHT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub num_users: usize,
    pub num_items: usize,
    pub num_features: usize,
    pub num_informative: usize,
    /// Target share of zero cells in the item-feature matrix.
    pub sparsity: f64,
    pub seed: u64,
    #[serde(default = "default_min_interactions")]
    pub min_interactions: usize,
    #[serde(default = "default_max_interactions")]
    pub max_interactions: usize,
}

fn default_min_interactions() -> usize {
    8
}

fn default_max_interactions() -> usize {
    20
}

impl SynthParams {
    pub fn new(
        num_users: usize,
        num_items: usize,
        num_features: usize,
        num_informative: usize,
        sparsity: f64,
        seed: u64,
    ) -> Self {
        Self {
            num_users,
            num_items,
            num_features,
            num_informative,
            sparsity,
            seed,
            min_interactions: default_min_interactions(),
            max_interactions: default_max_interactions(),
        }
    }

    fn column_count(&self) -> usize {
        ((1.0 - self.sparsity) * self.num_items as f64).round() as usize
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidParams(m));
        if self.num_users == 0 || self.num_items < 2 || self.num_features == 0 {
            return bad("need at least one user, two items and one feature".into());
        }
        if self.num_informative > self.num_features {
            return bad(format!(
                "num_informative {} exceeds num_features {}",
                self.num_informative, self.num_features
            ));
        }
        if !(0.0..1.0).contains(&self.sparsity) {
            return bad(format!("sparsity must lie in [0, 1), got {}", self.sparsity));
        }
        if self.num_informative > 0 && self.column_count() == 0 {
            return bad(format!(
                "sparsity {} leaves informative features empty at {} items",
                self.sparsity, self.num_items
            ));
        }
        if self.min_interactions == 0 || self.min_interactions > self.max_interactions {
            return bad("interaction range must satisfy 1 <= min <= max".into());
        }
        Ok(())
    }
}

/// JSON sidecar describing how a synthetic corpus was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub generator: String,
    pub params: SynthParams,
    pub informative: Vec<usize>,
    pub realized_sparsity: f64,
    pub num_interactions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub interactions: InteractionMatrix,
    pub features: ItemFeatureMatrix,
    pub manifest: CorpusManifest,
}

pub fn generate_corpus(params: &SynthParams) -> Result<SyntheticCorpus, DatasetError> {
    params.validate()?;
    let n_items = params.num_items;
    let n_features = params.num_features;

    let mut rng = rng_for(params.seed, STREAM_INFORMATIVE);
    let mut informative = index::sample(&mut rng, n_features, params.num_informative).into_vec();
    informative.sort_unstable();

    // Every column carries the same number of nonzeros so the requested
    // sparsity is met exactly up to rounding.
    let per_column = params.column_count();
    let mut rng = rng_for(params.seed, STREAM_FEATURES);
    let mut triplets = Vec::with_capacity(per_column * n_features);
    for feature in 0..n_features {
        for item in index::sample(&mut rng, n_items, per_column) {
            let value: f64 = rng.gen_range(0.5..1.5);
            triplets.push((item, feature, value));
        }
    }
    let features = ItemFeatureMatrix::from_triplets(n_items, n_features, triplets)?;

    let mut rng = rng_for(params.seed, STREAM_USERS);
    let max_profile = params.max_interactions.min(n_items - 1);
    let min_profile = params.min_interactions.min(max_profile);
    let mut pairs = Vec::new();
    let mut weights = vec![0.0f64; n_items];
    for user in 0..params.num_users {
        let preferred: Vec<usize> = if informative.is_empty() {
            Vec::new()
        } else {
            let count = rng.gen_range(1..=2usize).min(informative.len());
            index::sample(&mut rng, informative.len(), count)
                .into_iter()
                .map(|k| informative[k])
                .collect()
        };
        for (item, w) in weights.iter_mut().enumerate() {
            *w = BACKGROUND_WEIGHT + preferred.iter().map(|&f| features.get(item, f)).sum::<f64>();
        }
        let n = rng.gen_range(min_profile..=max_profile);
        // Weighted sampling without replacement via exponential keys.
        let mut keys: Vec<(f64, usize)> = weights
            .iter()
            .enumerate()
            .map(|(item, &w)| {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                (u.ln() / w, item)
            })
            .collect();
        keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        pairs.extend(keys[..n].iter().map(|&(_, item)| (user, item)));
    }

    // Items nobody picked are attached to a random user so every item id
    // appears in the interaction file.
    let mut seen = vec![false; n_items];
    for &(_, item) in &pairs {
        seen[item] = true;
    }
    let mut rng = rng_for(params.seed, STREAM_FILL);
    for (item, _) in seen.iter().enumerate().filter(|(_, s)| !**s) {
        pairs.push((rng.gen_range(0..params.num_users), item));
    }
    let (interactions, _) = InteractionMatrix::from_pairs(params.num_users, n_items, pairs)?;

    let manifest = CorpusManifest {
        generator: "planted-signal-v1".into(),
        params: params.clone(),
        informative,
        realized_sparsity: features.sparsity(),
        num_interactions: interactions.nnz(),
    };
    Ok(SyntheticCorpus {
        interactions,
        features,
        manifest,
    })
}

/// Generates a planted corpus and splits it into train/validation/test.
pub fn synthesize_corpus(params: &SynthParams, split_spec: &SplitSpec) -> Result<DatasetBundle, DatasetError> {
    let corpus = generate_corpus(params)?;
    let parts = split(&corpus.interactions, split_spec)?;
    let mut bundle = DatasetBundle::from_split(parts, corpus.features);
    bundle.manifest = Some(corpus.manifest);
    Ok(bundle)
}

/// Writes `interactions.csv`, `features.csv` and `manifest.json` into `dir`.
pub fn write_corpus(corpus: &SyntheticCorpus, dir: &Path) -> Result<(), DatasetError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| DatasetError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;

    let path = dir.join("interactions.csv");
    let mut out = String::from("user_id,item_id\n");
    for (u, i) in corpus.interactions.pairs() {
        out.push_str(&format!("u{u},i{i}\n"));
    }
    fs::write(&path, out).map_err(io(&path))?;

    let path = dir.join("features.csv");
    let mut out = String::from("item_id,feature_id,value\n");
    for (i, f, v) in corpus.features.triplets() {
        out.push_str(&format!("i{i},{f},{v:?}\n"));
    }
    fs::write(&path, out).map_err(io(&path))?;

    let path = dir.join("manifest.json");
    let mut file = fs::File::create(&path).map_err(io(&path))?;
    serde_json::to_writer_pretty(&mut file, &corpus.manifest)?;
    file.write_all(b"\n").map_err(io(&path))?;
    Ok(())
}
