use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use pdqubo::dataset::{generate_corpus, write_corpus, CorpusManifest, SynthParams};
use pdqubo::qubo::{parse_triplets, validate, QMatrixFile, ValidationReport};
use std::path::Path;

/// Writes a synthetic corpus (interactions, features, manifest) to the
/// output directory.
pub fn cmd_synth(config: &ExperimentConfig) -> Result<CorpusManifest> {
    let dir = config
        .out
        .as_deref()
        .ok_or_else(|| CliError::config("synth", "an output directory is required"))?;
    let params = SynthParams::new(
        config.synth_users,
        config.synth_items,
        config.synth_features,
        config.synth_informative,
        config.synth_sparsity,
        config.synth_seed,
    );
    let corpus = generate_corpus(&params).map_err(|e| CliError::config("synth", e))?;
    write_corpus(&corpus, dir).map_err(|e| CliError::data("output", e))?;
    Ok(corpus.manifest)
}

/// Checks a coefficient matrix stored as JSON or as wire-format triplets.
pub fn cmd_validate_q(path: &Path) -> Result<ValidationReport> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::data("validate-q", format!("{}: {e}", path.display())))?;
    let q = if text.trim_start().starts_with('{') {
        serde_json::from_str::<QMatrixFile>(&text)
            .map_err(|e| CliError::data("validate-q", e))?
            .into_matrix()
            .map_err(|e| CliError::data("validate-q", e))?
    } else {
        parse_triplets(&text).map_err(|e| CliError::data("validate-q", e))?.q
    };
    validate(&q).map_err(|e| CliError::data("validate-q", e))
}
