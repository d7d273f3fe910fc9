use super::{CounterfactualError, CounterfactualProfile, PairMode};
use crate::recsys::{EvalSplit, MetricKind, MetricSpec};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// On-disk profile: pairs stored as the upper triangle, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    pub baseline: f64,
    pub metric: MetricKind,
    pub cutoff: usize,
    pub split: EvalSplit,
    pub mode: PairMode,
    pub num_features: usize,
    pub singles: Vec<f64>,
    pub pairs: Vec<f64>,
    pub checksum: String,
}

impl From<&CounterfactualProfile> for ProfileFile {
    fn from(p: &CounterfactualProfile) -> Self {
        Self {
            baseline: p.baseline,
            metric: p.metric.kind,
            cutoff: p.metric.cutoff,
            split: p.evaluation_split,
            mode: p.mode,
            num_features: p.num_features(),
            singles: p.singles.clone(),
            pairs: p.upper_triangle(),
            checksum: p.fingerprint.clone(),
        }
    }
}

impl ProfileFile {
    pub fn into_profile(self) -> Result<CounterfactualProfile, CounterfactualError> {
        if self.singles.len() != self.num_features {
            return Err(CounterfactualError::File(format!(
                "num_features {} but {} singles",
                self.num_features,
                self.singles.len()
            )));
        }
        if self.singles.iter().chain(&self.pairs).any(|x| !x.is_finite()) {
            return Err(CounterfactualError::File("non-finite delta".into()));
        }
        CounterfactualProfile::from_parts(
            self.baseline,
            self.singles,
            &self.pairs,
            MetricSpec {
                kind: self.metric,
                cutoff: self.cutoff,
            },
            self.split,
            self.mode,
            self.checksum,
        )
    }

    pub fn save(&self, path: &Path) -> Result<(), CounterfactualError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CounterfactualError::File(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| CounterfactualError::File(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CounterfactualError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CounterfactualError::File(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CounterfactualError::File(format!("{}: {e}", path.display())))
    }
}
