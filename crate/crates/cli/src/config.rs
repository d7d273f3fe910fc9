//! Flat TOML experiment configuration.

use crate::error::{CliError, Result};
use pdqubo::dataset::SplitSpec;
use pdqubo::recsys::MetricSpec;
use pdqubo::solvers::SolverKind;
use pdqubo::Execution;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builder {
    Pdqubo,
    PdquboIndiv,
    Miqubo,
    Coqubo,
    Boosting,
}

impl Builder {
    pub fn name(self) -> &'static str {
        match self {
            Builder::Pdqubo => "pdqubo",
            Builder::PdquboIndiv => "pdqubo-indiv",
            Builder::Miqubo => "miqubo",
            Builder::Coqubo => "coqubo",
            Builder::Boosting => "boosting",
        }
    }
}

impl fmt::Display for Builder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builder {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pdqubo" | "pdqubo-comb" => Ok(Builder::Pdqubo),
            "pdqubo-indiv" => Ok(Builder::PdquboIndiv),
            "miqubo" => Ok(Builder::Miqubo),
            "coqubo" => Ok(Builder::Coqubo),
            "boosting" | "qubo-boosting" => Ok(Builder::Boosting),
            other => Err(CliError::config("config", format!("unknown builder {other:?}"))),
        }
    }
}

/// Cardinality target: a fixed count or `*` (solver decides, penalty omitted).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KValue {
    Fixed(usize),
    Auto,
}

impl KValue {
    pub fn target(self) -> Option<usize> {
        match self {
            KValue::Fixed(k) => Some(k),
            KValue::Auto => None,
        }
    }
}

impl fmt::Display for KValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KValue::Fixed(k) => write!(f, "{k}"),
            KValue::Auto => f.write_str("*"),
        }
    }
}

/// Parses `8`, `*` or a comma-separated list such as `8,10,*`.
pub fn parse_k_list(s: &str) -> Result<Vec<KValue>> {
    let list: Vec<KValue> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t {
            "*" => Ok(KValue::Auto),
            _ => t
                .parse()
                .map(KValue::Fixed)
                .map_err(|_| CliError::config("config", format!("bad k value {t:?}"))),
        })
        .collect::<Result<_>>()?;
    if list.is_empty() {
        return Err(CliError::config("config", "empty k list"));
    }
    Ok(list)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KList(pub Vec<KValue>);

impl Serialize for KList {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let text: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        s.serialize_str(&text.join(","))
    }
}

impl<'de> Deserialize<'de> for KList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Item {
            Count(usize),
            Text(String),
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Text(String),
            List(Vec<Item>),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Count(k) => k.to_string(),
            Raw::Text(t) => t,
            Raw::List(items) => items
                .into_iter()
                .map(|i| match i {
                    Item::Count(k) => k.to_string(),
                    Item::Text(t) => t,
                })
                .collect::<Vec<_>>()
                .join(","),
        };
        parse_k_list(&text).map(KList).map_err(D::Error::custom)
    }
}

/// Penalty weight: `auto` scales with the matrix, `inf` makes the
/// cardinality constraint hard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    Auto,
    Hard,
    Weight(f64),
}

impl Serialize for Penalty {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Penalty::Auto => s.serialize_str("auto"),
            Penalty::Hard => s.serialize_str("inf"),
            Penalty::Weight(w) => s.serialize_f64(*w),
        }
    }
}

impl<'de> Deserialize<'de> for Penalty {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(w) if w.is_infinite() && w > 0.0 => Ok(Penalty::Hard),
            Raw::Number(w) if w.is_finite() && w >= 0.0 => Ok(Penalty::Weight(w)),
            Raw::Number(w) => Err(D::Error::custom(format!("invalid penalty {w}"))),
            Raw::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "auto" => Ok(Penalty::Auto),
                "inf" | "hard" => Ok(Penalty::Hard),
                other => other
                    .parse::<f64>()
                    .ok()
                    .filter(|w| w.is_finite() && *w >= 0.0)
                    .map(Penalty::Weight)
                    .ok_or_else(|| D::Error::custom(format!("invalid penalty {other:?}"))),
            },
        }
    }
}

fn default_solvers() -> Vec<SolverKind> {
    vec![SolverKind::Sa]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Repetitions of every pipeline cell; run `r` uses seed stream `r`.
    pub runs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// `user_id,item_id` CSV; when absent a synthetic corpus is generated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interactions: Option<PathBuf>,
    /// `item_id,feature_id,value` CSV.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_features: Option<usize>,

    pub synth_users: usize,
    pub synth_items: usize,
    pub synth_features: usize,
    pub synth_informative: usize,
    pub synth_sparsity: f64,
    pub synth_seed: u64,

    pub test_fraction: f64,
    /// Share of each user's remaining interactions held out for the profile.
    pub validation_fraction: f64,
    pub n_neighbors: usize,
    pub metric: String,
    pub execution: Execution,

    pub builder: Builder,
    pub solvers: Vec<SolverKind>,
    pub k: KList,
    pub penalty: Penalty,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sa_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tabu_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sgd_samples: Option<usize>,
    pub negative_ratio: usize,
    pub boosting_regularizer: f64,
    pub checkpoint_chunk: usize,

    pub num_solutions: usize,
    pub scales: Vec<usize>,
    pub sample_counts: Vec<usize>,
    pub stability_reps: usize,
    pub histogram_bins: usize,
    pub constrained_fraction: f64,
    pub drop_fractions: Vec<f64>,
    pub difficulty_reps: usize,
    pub timing_reps: usize,
    pub timing_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            runs: 5,
            out: None,
            interactions: None,
            features: None,
            num_features: None,
            synth_users: 100,
            synth_items: 200,
            synth_features: 30,
            synth_informative: 8,
            synth_sparsity: 0.8,
            synth_seed: 5,
            test_fraction: 0.2,
            validation_fraction: 0.3,
            n_neighbors: 100,
            metric: "ndcg@10".into(),
            execution: Execution::Parallel,
            builder: Builder::Pdqubo,
            solvers: default_solvers(),
            k: KList(vec![KValue::Fixed(8), KValue::Auto]),
            penalty: Penalty::Auto,
            sa_samples: None,
            tabu_samples: None,
            sgd_samples: None,
            negative_ratio: 1,
            boosting_regularizer: 0.0,
            checkpoint_chunk: 64,
            num_solutions: 200,
            scales: vec![10, 30, 50, 100, 150],
            sample_counts: vec![1, 4, 16, 64],
            stability_reps: 10,
            histogram_bins: 20,
            constrained_fraction: 0.9,
            drop_fractions: vec![0.2, 0.4, 0.6],
            difficulty_reps: 3,
            timing_reps: 3,
            timing_samples: 100,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub solvers: Option<String>,
    pub builder: Option<String>,
    pub k: Option<String>,
}

impl ExperimentConfig {
    /// Reads a TOML config, or a JSON report whose embedded `config` is
    /// reused verbatim.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        if let Ok(value) = serde_json::from_str::<serde_json::Value>(&text) {
            let inner = value.get("config").cloned().unwrap_or(value);
            return serde_json::from_value(inner)
                .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())));
        }
        toml::from_str(&text).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(list) = &o.solvers {
            self.solvers = list
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.parse::<SolverKind>().map_err(|e| CliError::config("config", e)))
                .collect::<Result<_>>()?;
        }
        if let Some(b) = &o.builder {
            self.builder = b.parse()?;
        }
        if let Some(k) = &o.k {
            self.k = KList(parse_k_list(k)?);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::config("config", m));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.solvers.is_empty() {
            return bad("at least one solver is required".into());
        }
        if self.n_neighbors == 0 {
            return bad("n_neighbors must be at least 1".into());
        }
        self.metric_spec()?;
        self.split_spec(0)
            .validate()
            .map_err(|e| CliError::config("config", e))?;
        if self.interactions.is_some() != self.features.is_some() {
            return bad("interactions and features must be given together".into());
        }
        for p in [&self.interactions, &self.features].into_iter().flatten() {
            if !p.exists() {
                return bad(format!("{} does not exist", p.display()));
            }
        }
        if self.interactions.is_none() {
            if let Some(k) = self
                .k
                .0
                .iter()
                .filter_map(|k| k.target())
                .find(|&k| k > self.synth_features)
            {
                return bad(format!("k = {k} exceeds {} features", self.synth_features));
            }
        }
        if !(self.constrained_fraction > 0.0 && self.constrained_fraction <= 1.0) {
            return bad("constrained_fraction must lie in (0, 1]".into());
        }
        if let Some(f) = self.drop_fractions.iter().find(|f| !(0.0..1.0).contains(*f)) {
            return bad(format!("drop fraction {f} outside [0, 1)"));
        }
        for (name, v) in [
            ("negative_ratio", self.negative_ratio),
            ("checkpoint_chunk", self.checkpoint_chunk),
            ("stability_reps", self.stability_reps),
            ("difficulty_reps", self.difficulty_reps),
            ("timing_reps", self.timing_reps),
            ("timing_samples", self.timing_samples),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.sample_counts.contains(&0) {
            return bad("sample counts must be at least 1".into());
        }
        Ok(())
    }

    pub fn metric_spec(&self) -> Result<MetricSpec> {
        self.metric.parse().map_err(|e| CliError::config("config", e))
    }

    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            test_fraction: self.test_fraction,
            validation_fraction: self.validation_fraction,
            seed,
        }
    }

    /// Configured restart count for `kind`, if any.
    pub fn samples_for(&self, kind: SolverKind) -> Option<usize> {
        match kind {
            SolverKind::Sa | SolverKind::ExternalStub => self.sa_samples,
            SolverKind::Tabu => self.tabu_samples,
            SolverKind::Sgd => self.sgd_samples,
            SolverKind::Exhaustive => None,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::config("config", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_lists_in_every_spelling() {
        for text in ["k = \"8,*\"", "k = [8, \"*\"]", "k = [\"8\", \"*\"]"] {
            let c: ExperimentConfig = toml::from_str(text).unwrap();
            assert_eq!(c.k.0, vec![KValue::Fixed(8), KValue::Auto]);
        }
        let c: ExperimentConfig = toml::from_str("k = 3").unwrap();
        assert_eq!(c.k.0, vec![KValue::Fixed(3)]);
        assert!(toml::from_str::<ExperimentConfig>("k = \"x\"").is_err());
    }

    #[test]
    fn penalty_spellings() {
        let parse = |t: &str| toml::from_str::<ExperimentConfig>(t).map(|c| c.penalty);
        assert_eq!(parse("penalty = \"auto\"").unwrap(), Penalty::Auto);
        assert_eq!(parse("penalty = \"inf\"").unwrap(), Penalty::Hard);
        assert_eq!(parse("penalty = inf").unwrap(), Penalty::Hard);
        assert_eq!(parse("penalty = 2.5").unwrap(), Penalty::Weight(2.5));
        assert!(parse("penalty = -1.0").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("sede = 1").is_err());
    }

    #[test]
    fn toml_and_json_round_trip() {
        let c = ExperimentConfig {
            solvers: vec![SolverKind::Sa, SolverKind::Tabu],
            penalty: Penalty::Hard,
            sa_samples: Some(64),
            ..ExperimentConfig::default()
        };
        let back: ExperimentConfig = toml::from_str(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), c);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = ExperimentConfig::default();
        c.apply(&Overrides {
            seed: Some(9),
            solvers: Some("tabu,sgd".into()),
            builder: Some("miqubo".into()),
            k: Some("*".into()),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.solvers, vec![SolverKind::Tabu, SolverKind::Sgd]);
        assert_eq!(c.builder, Builder::Miqubo);
        assert_eq!(c.k.0, vec![KValue::Auto]);
        assert!(c
            .apply(&Overrides {
                builder: Some("lasso".into()),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        c.k = KList(vec![KValue::Fixed(31)]);
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            metric: "map@3".into(),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            interactions: Some("/nonexistent.csv".into()),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
