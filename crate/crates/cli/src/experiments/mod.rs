//! Pipeline stages shared by the subcommands.

mod difficulty;
mod energy;
mod pipeline;
mod stability;
mod timing;
mod tools;

pub use difficulty::{cmd_difficulty, DifficultyReport, DifficultyRow};
pub use energy::{cmd_energy_vs_performance, EnergyPerfReport, EnergyPoint};
pub use pipeline::cmd_pipeline;
pub use stability::{cmd_stability, ConstrainedComparison, ScaleStability, StabilityBundle};
pub use timing::{cmd_timing, TimingRow, TimingTable};
pub use tools::{cmd_synth, cmd_validate_q};

use crate::config::{Builder, ExperimentConfig, KValue, Penalty};
use crate::error::{CliError, Result};
use crate::report::RunRow;
use pdqubo::counterfactual::{
    compute_profile, compute_profile_checkpointed, CounterfactualProfile, PairMode, ProfileFile,
};
use pdqubo::dataset::{
    load_features, load_interactions, negative_sample, split, synthesize_corpus, DatasetBundle, FeatureMask,
    SynthParams,
};
use pdqubo::qubo::{
    build_boosting, build_coqubo, build_miqubo, build_pdqubo, single_feature_predictions, CoefficientMatrix,
    QMatrixFile, QuboProblem,
};
use pdqubo::recsys::{evaluate_with_mask, EvalSplit, Evaluator, ItemKnnEvaluator, MetricSpec};
use pdqubo::seed::{derive_seed, rng_for};
use pdqubo::solvers::{solve, SolverConfig, SolverKind};
use rand::Rng;
use std::path::Path;
use std::time::Instant;

const STREAM_SPLIT: u64 = 1;
const STREAM_NEGATIVES: u64 = 2;
const STREAM_DROP: u64 = 3;
const STREAM_SOLVERS: u64 = 4;
const STREAM_EXTRA: u64 = 5;

pub fn run_seed(config: &ExperimentConfig, run: usize) -> u64 {
    derive_seed(config.seed, run as u64)
}

/// Data and test-split evaluator for one repetition.
pub struct RunContext {
    pub run: usize,
    pub run_seed: u64,
    pub split_seed: u64,
    pub bundle: DatasetBundle,
    pub metric: MetricSpec,
    pub test: ItemKnnEvaluator,
    pub metric_before: f64,
}

impl RunContext {
    pub fn informative(&self) -> Option<&[usize]> {
        self.bundle.manifest.as_ref().map(|m| m.informative.as_slice())
    }

    pub fn num_features(&self) -> usize {
        self.bundle.num_features()
    }

    pub fn extra_seed(&self) -> u64 {
        derive_seed(self.run_seed, STREAM_EXTRA)
    }

    /// Test metric with only `selected` features kept, cross-checked against
    /// a from-scratch retrain.
    pub fn metric_with(&self, selected: &[usize]) -> Result<f64> {
        let mask = FeatureMask::complement_of(selected, self.num_features());
        let fast = self
            .test
            .evaluate_mask(&mask)
            .map_err(|e| CliError::data("evaluate", e))?
            .metric_value;
        let b = &self.bundle;
        let full = evaluate_with_mask(
            &b.features,
            &mask,
            &b.train,
            &b.test,
            &self.metric,
            self.test.n_neighbors(),
        )
        .map_err(|e| CliError::data("evaluate", e))?;
        if fast != full {
            return Err(CliError::data(
                "evaluate",
                format!("spot check failed: incremental {fast} vs retrain {full}"),
            ));
        }
        Ok(fast)
    }
}

fn load_bundle(config: &ExperimentConfig, split_seed: u64) -> Result<DatasetBundle> {
    let spec = config.split_spec(split_seed);
    match (&config.interactions, &config.features) {
        (Some(ip), Some(fp)) => {
            let loaded = load_interactions(ip).map_err(|e| CliError::data("load", e))?;
            if loaded.duplicates > 0 {
                log::warn!("{} duplicate interactions collapsed", loaded.duplicates);
            }
            let features =
                load_features(fp, &loaded.items, config.num_features).map_err(|e| CliError::data("load", e))?;
            let parts = split(&loaded.matrix, &spec).map_err(|e| CliError::data("split", e))?;
            Ok(DatasetBundle::from_split(parts, features))
        }
        _ => {
            let params = SynthParams::new(
                config.synth_users,
                config.synth_items,
                config.synth_features,
                config.synth_informative,
                config.synth_sparsity,
                config.synth_seed,
            );
            synthesize_corpus(&params, &spec).map_err(|e| CliError::data("synthesize", e))
        }
    }
}

/// Loads or synthesizes data for repetition `run`, optionally zeroing a
/// share of the feature values.
pub fn prepare_run(config: &ExperimentConfig, run: usize, drop_fraction: Option<f64>) -> Result<RunContext> {
    let run_seed = run_seed(config, run);
    let split_seed = derive_seed(run_seed, STREAM_SPLIT);
    let mut bundle = load_bundle(config, split_seed)?;
    if let Some(f) = drop_fraction.filter(|&f| f > 0.0) {
        bundle.features = bundle.features.drop_values(f, &mut rng_for(run_seed, STREAM_DROP));
    }
    let n = bundle.num_features();
    if let Some(k) = config.k.0.iter().filter_map(|k| k.target()).find(|&k| k > n) {
        return Err(CliError::config("config", format!("k = {k} exceeds {n} features")));
    }
    let metric = config.metric_spec()?;
    let test = ItemKnnEvaluator::new(
        &bundle.features,
        &bundle.train,
        &bundle.test,
        metric,
        config.n_neighbors,
        EvalSplit::Test,
    )
    .map_err(|e| CliError::data("evaluate", e))?;
    let before = test
        .evaluate_mask(&FeatureMask::empty())
        .map_err(|e| CliError::data("evaluate", e))?;
    if before.users_evaluated == 0 {
        return Err(CliError::data("evaluate", "no user has test interactions"));
    }
    Ok(RunContext {
        run,
        run_seed,
        split_seed,
        bundle,
        metric,
        test,
        metric_before: before.metric_value,
    })
}

pub struct BuiltQ {
    pub q: CoefficientMatrix,
    pub profile: Option<CounterfactualProfile>,
    pub secs: f64,
}

/// Where per-run artifacts go: output directory and a file-name tag.
pub struct Artifacts<'a> {
    pub dir: &'a Path,
    pub tag: String,
}

fn make_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::data("output", format!("{}: {e}", path.display())))
}

fn profile_for(
    config: &ExperimentConfig,
    ctx: &RunContext,
    mode: PairMode,
    artifacts: Option<&Artifacts>,
) -> Result<CounterfactualProfile> {
    let b = &ctx.bundle;
    let evaluator = ItemKnnEvaluator::new(
        &b.features,
        &b.train,
        &b.validation,
        ctx.metric,
        config.n_neighbors,
        EvalSplit::Validation,
    )
    .map_err(|e| CliError::data("profile", e))?;
    let mode_name = match mode {
        PairMode::Comb => "comb",
        PairMode::Indiv => "indiv",
    };
    let profile = match artifacts {
        Some(a) => {
            let dir = a.dir.join("checkpoints");
            make_dir(&dir)?;
            let fp = evaluator.fingerprint();
            let path = dir.join(format!("{}-{mode_name}-{}.jsonl", a.tag, &fp[..12]));
            compute_profile_checkpointed(&evaluator, mode, config.execution, &path, config.checkpoint_chunk)
        }
        None => compute_profile(&evaluator, mode, config.execution),
    }
    .map_err(|e| CliError::data("profile", e))?;
    if profile.evaluation_split == EvalSplit::Test {
        return Err(CliError::data(
            "profile",
            "refusing a profile computed on the test split",
        ));
    }
    if let Some(a) = artifacts {
        let dir = a.dir.join("profiles");
        make_dir(&dir)?;
        ProfileFile::from(&profile)
            .save(&dir.join(format!("{}-{mode_name}.json", a.tag)))
            .map_err(|e| CliError::data("output", e))?;
    }
    Ok(profile)
}

/// Builds the coefficient matrix for `builder` on the run's training data.
pub fn build_q(
    config: &ExperimentConfig,
    ctx: &RunContext,
    builder: Builder,
    artifacts: Option<&Artifacts>,
) -> Result<BuiltQ> {
    let started = Instant::now();
    let b = &ctx.bundle;
    let samples = || {
        negative_sample(
            &b.train,
            config.negative_ratio,
            derive_seed(ctx.run_seed, STREAM_NEGATIVES),
        )
        .map_err(|e| CliError::data("build", e))
    };
    let built = |e: pdqubo::qubo::QuboError| CliError::data("build", e);
    let (q, profile) = match builder {
        Builder::Pdqubo | Builder::PdquboIndiv => {
            let mode = if builder == Builder::Pdqubo {
                PairMode::Comb
            } else {
                PairMode::Indiv
            };
            let p = profile_for(config, ctx, mode, artifacts)?;
            (build_pdqubo(&p), Some(p))
        }
        Builder::Miqubo => (
            build_miqubo(&b.features, &samples()?, config.execution).map_err(built)?,
            None,
        ),
        Builder::Coqubo => (
            build_coqubo(&b.features, &samples()?, config.execution).map_err(built)?,
            None,
        ),
        Builder::Boosting => {
            let s = samples()?;
            let weak = single_feature_predictions(&b.features, &b.train, &s, config.n_neighbors, config.execution)
                .map_err(|e| CliError::data("build", e))?;
            (
                build_boosting(&weak, &s, config.boosting_regularizer).map_err(built)?,
                None,
            )
        }
    };
    if let Some(a) = artifacts {
        let dir = a.dir.join("q");
        make_dir(&dir)?;
        QMatrixFile::from(&q)
            .save(&dir.join(format!("{}-{builder}.json", a.tag)))
            .map_err(|e| CliError::data("output", e))?;
    }
    Ok(BuiltQ {
        q,
        profile,
        secs: started.elapsed().as_secs_f64(),
    })
}

/// Problem with the configured penalty; the penalty is omitted for `k = *`.
pub fn make_problem(q: CoefficientMatrix, k: KValue, penalty: Penalty) -> Result<QuboProblem> {
    let p = QuboProblem::new(q, k.target()).map_err(|e| CliError::config("problem", e))?;
    Ok(match (k, penalty) {
        (KValue::Auto, _) => p,
        (_, Penalty::Auto) => {
            let p = p.with_auto_penalty();
            log::info!("auto penalty weight {}", p.penalty_weight);
            p
        }
        (_, Penalty::Hard) => p
            .with_penalty(f64::INFINITY)
            .map_err(|e| CliError::config("problem", e))?,
        (_, Penalty::Weight(w)) => p.with_penalty(w).map_err(|e| CliError::config("problem", e))?,
    })
}

pub fn solver_config(config: &ExperimentConfig, kind: SolverKind, seed: u64) -> SolverConfig {
    let mut c = SolverConfig::new(kind, seed).with_execution(config.execution);
    c.num_samples = config.samples_for(kind);
    c
}

/// Seed for cell `index` (k-major, solver-minor) of a run.
pub fn solver_seed(ctx: &RunContext, index: usize) -> u64 {
    derive_seed(derive_seed(ctx.run_seed, STREAM_SOLVERS), index as u64)
}

/// Solves one (k, solver) cell and scores the selection on the test split.
pub fn solve_cell(
    config: &ExperimentConfig,
    ctx: &RunContext,
    builder: Builder,
    built: &BuiltQ,
    k: KValue,
    kind: SolverKind,
    seed: u64,
) -> Result<RunRow> {
    let problem = make_problem(built.q.clone(), k, config.penalty)?;
    let result = solve(&problem, &solver_config(config, kind, seed)).map_err(|e| CliError::solver("solve", e))?;
    let selected = result.best.selected();
    let metric_after = ctx.metric_with(&selected)?;
    let cardinality_ok = k.target().map(|k| k == selected.len());
    if cardinality_ok == Some(false) {
        log::warn!(
            "run {} {builder}/{kind} k={k}: {} features selected",
            ctx.run,
            selected.len()
        );
    }
    let penalty_weight = (k.target().is_some() && problem.penalty_weight.is_finite()).then_some(problem.penalty_weight);
    Ok(RunRow {
        run: ctx.run,
        run_seed: ctx.run_seed,
        split_seed: ctx.split_seed,
        solver_seed: seed,
        builder,
        solver: kind,
        k: k.to_string(),
        penalty_weight,
        planted_recovered: ctx
            .informative()
            .map(|inf| selected.iter().filter(|i| inf.contains(i)).count()),
        cardinality: selected.len(),
        cardinality_ok,
        selected,
        energy: result.best_energy,
        metric_before: ctx.metric_before,
        metric_after,
        evaluations: result.evaluations,
        build_secs: built.secs,
        solve_secs: result.wall_time.as_secs_f64(),
    })
}

/// Symmetric matrix with entries uniform in `[-1, 1)`.
pub fn random_q(n: usize, seed: u64) -> CoefficientMatrix {
    let mut rng = rng_for(seed, n as u64);
    let mut q = CoefficientMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            q.set(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    q
}

pub(crate) fn output_dir(config: &ExperimentConfig) -> Result<Option<&Path>> {
    match &config.out {
        Some(dir) => {
            make_dir(dir)?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

/// Copies the resolved configuration next to the outputs.
pub(crate) fn write_resolved_config(config: &ExperimentConfig, dir: &Path) -> Result<()> {
    let path = dir.join("config.toml");
    std::fs::write(&path, config.to_toml()?).map_err(|e| CliError::data("output", format!("{}: {e}", path.display())))
}
