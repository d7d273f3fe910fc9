//! Counterfactual profiles: how much the evaluation metric drops when a
//! single feature, or a pair of features, is zeroed for every item.
//!
//! Sign convention: a positive delta means performance got worse once the
//! feature(s) were masked. Deltas are never clipped.

mod checkpoint;
mod file;

pub use checkpoint::compute_profile_checkpointed;
pub use file::ProfileFile;

use crate::dataset::FeatureMask;
use crate::par::Execution;
use crate::recsys::{EvalSplit, Evaluator, MetricSpec, RecsysError};
use serde::{Deserialize, Serialize};

pub type MaskSpec = FeatureMask;

#[derive(Debug, thiserror::Error)]
pub enum CounterfactualError {
    #[error("no evaluable users on the {0} split")]
    NoEvaluableUsers(EvalSplit),
    #[error(transparent)]
    Recsys(#[from] RecsysError),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },
    #[error("profile file: {0}")]
    File(String),
}

/// Whether pairwise deltas are measured (`Comb`) or only single-feature
/// ones (`Indiv`, giving a diagonal-only coefficient matrix downstream).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    Comb,
    Indiv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualProfile {
    pub baseline: f64,
    pub singles: Vec<f64>,
    /// Dense row-major `n x n`, symmetric, zero diagonal.
    pairs: Vec<f64>,
    pub metric: MetricSpec,
    pub evaluation_split: EvalSplit,
    pub mode: PairMode,
    pub fingerprint: String,
}

impl CounterfactualProfile {
    /// Assembles a profile from singles and an upper-triangle (row-major,
    /// `i < j`) vector of pair deltas.
    pub fn from_parts(
        baseline: f64,
        singles: Vec<f64>,
        upper: &[f64],
        metric: MetricSpec,
        evaluation_split: EvalSplit,
        mode: PairMode,
        fingerprint: String,
    ) -> Result<Self, CounterfactualError> {
        let n = singles.len();
        if upper.len() != n * n.saturating_sub(1) / 2 {
            return Err(CounterfactualError::File(format!(
                "{} pair values for {n} features",
                upper.len()
            )));
        }
        let mut pairs = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                pairs[i * n + j] = upper[k];
                pairs[j * n + i] = upper[k];
                k += 1;
            }
        }
        Ok(Self {
            baseline,
            singles,
            pairs,
            metric,
            evaluation_split,
            mode,
            fingerprint,
        })
    }

    pub fn num_features(&self) -> usize {
        self.singles.len()
    }

    /// `E_ij`; zero on the diagonal.
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.pairs[i * self.num_features() + j]
    }

    /// Pair deltas for `i < j`, row-major.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.num_features();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.pair(i, j))
            .collect()
    }

    /// Copy with every delta multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.singles.iter_mut().for_each(|e| *e *= c);
        out.pairs.iter_mut().for_each(|e| *e *= c);
        out
    }
}

/// A unit of counterfactual work: mask one feature or a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum Task {
    Single([usize; 1]),
    Pair([usize; 2]),
}

impl Task {
    fn mask(&self) -> FeatureMask {
        match *self {
            Task::Single([i]) => FeatureMask::single(i),
            Task::Pair([i, j]) => FeatureMask::pair(i, j),
        }
    }
}

pub(crate) fn tasks(n: usize, mode: PairMode) -> Vec<Task> {
    let mut out: Vec<Task> = (0..n).map(|i| Task::Single([i])).collect();
    if mode == PairMode::Comb {
        out.extend((0..n).flat_map(|i| (i + 1..n).map(move |j| Task::Pair([i, j]))));
    }
    out
}

fn run_tasks<E: Evaluator + ?Sized>(
    evaluator: &E,
    baseline: f64,
    tasks: &[Task],
    exec: Execution,
) -> Result<Vec<f64>, CounterfactualError> {
    exec.map_slice(tasks, |t| {
        evaluator.evaluate_mask(&t.mask()).map(|r| baseline - r.metric_value)
    })
    .into_iter()
    .map(|r| r.map_err(CounterfactualError::from))
    .collect()
}

fn assemble(
    evaluator: &(impl Evaluator + ?Sized),
    baseline: f64,
    mode: PairMode,
    deltas: &[f64],
) -> Result<CounterfactualProfile, CounterfactualError> {
    let n = evaluator.num_features();
    let singles = deltas[..n].to_vec();
    let upper = match mode {
        PairMode::Comb => deltas[n..].to_vec(),
        PairMode::Indiv => vec![0.0; n * n.saturating_sub(1) / 2],
    };
    CounterfactualProfile::from_parts(
        baseline,
        singles,
        &upper,
        evaluator.metric(),
        evaluator.split(),
        mode,
        evaluator.fingerprint(),
    )
}

/// Metric with every feature present.
pub fn compute_baseline<E: Evaluator + ?Sized>(evaluator: &E) -> Result<f64, CounterfactualError> {
    let r = evaluator.evaluate_mask(&FeatureMask::empty())?;
    if r.users_evaluated == 0 {
        return Err(CounterfactualError::NoEvaluableUsers(evaluator.split()));
    }
    Ok(r.metric_value)
}

/// `E_i = baseline - metric(mask {i})` for every feature.
pub fn compute_singles<E: Evaluator + ?Sized>(
    evaluator: &E,
    baseline: f64,
    exec: Execution,
) -> Result<Vec<f64>, CounterfactualError> {
    run_tasks(
        evaluator,
        baseline,
        &tasks(evaluator.num_features(), PairMode::Indiv),
        exec,
    )
}

/// `E_ij = baseline - metric(mask {i, j})` as a dense symmetric matrix
/// (row-major, zero diagonal).
pub fn compute_pairs<E: Evaluator + ?Sized>(
    evaluator: &E,
    baseline: f64,
    exec: Execution,
) -> Result<Vec<f64>, CounterfactualError> {
    let n = evaluator.num_features();
    let pair_tasks: Vec<Task> = tasks(n, PairMode::Comb).split_off(n);
    let upper = run_tasks(evaluator, baseline, &pair_tasks, exec)?;
    let mut dense = vec![0.0; n * n];
    for (t, e) in pair_tasks.iter().zip(upper) {
        if let Task::Pair([i, j]) = *t {
            dense[i * n + j] = e;
            dense[j * n + i] = e;
        }
    }
    Ok(dense)
}

/// Full profile: baseline, singles and (in `Comb` mode) pairs.
pub fn compute_profile<E: Evaluator + ?Sized>(
    evaluator: &E,
    mode: PairMode,
    exec: Execution,
) -> Result<CounterfactualProfile, CounterfactualError> {
    let baseline = compute_baseline(evaluator)?;
    let deltas = run_tasks(evaluator, baseline, &tasks(evaluator.num_features(), mode), exec)?;
    assemble(evaluator, baseline, mode, &deltas)
}
