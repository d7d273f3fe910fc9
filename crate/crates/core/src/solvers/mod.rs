//! Energy minimizers behind one contract.
//!
//! Every solver runs `num_samples` independent restarts. Restart `r` draws
//! from the stream `derive_seed(seed, r)`, so its outcome does not depend on
//! how many restarts were requested, and restarts can be scheduled on any
//! thread. Results are merged by minimum energy, then by the
//! lexicographically smallest bit vector.

mod anneal;
mod exhaustive;
mod external;
mod gradient;
mod stability;
mod state;
mod tabu;

pub use anneal::solve_sa;
pub use exhaustive::{solve_exhaustive, EXHAUSTIVE_LIMIT};
pub use external::{external_sampler_submit, SamplerEndpoint};
pub use gradient::{relaxed_energy, relaxed_gradient, solve_sgd};
pub use stability::{sample_stability, EnergyHistogram, StabilityReport};
pub use state::FlipState;
pub use tabu::solve_tabu;

use crate::par::Execution;
use crate::qubo::{energy, BinarySolution, QuboError, QuboProblem};
use serde::{Deserialize, Serialize};
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("exhaustive search refused: {size} variables exceeds the limit of {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error("{solver} does not support a hard cardinality constraint")]
    Unsupported { solver: SolverKind },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Qubo(#[from] QuboError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Exhaustive,
    Sa,
    Tabu,
    Sgd,
    ExternalStub,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Exhaustive => "exhaustive",
            SolverKind::Sa => "sa",
            SolverKind::Tabu => "tabu",
            SolverKind::Sgd => "sgd",
            SolverKind::ExternalStub => "external-stub",
        }
    }

    /// Restart count used when a config leaves `num_samples` unset.
    pub fn default_samples(self) -> usize {
        match self {
            SolverKind::Exhaustive => 1,
            SolverKind::Sa | SolverKind::ExternalStub => 2000,
            SolverKind::Tabu => 200,
            SolverKind::Sgd => 50,
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exhaustive" => Ok(SolverKind::Exhaustive),
            "sa" => Ok(SolverKind::Sa),
            "tabu" | "ts" => Ok(SolverKind::Tabu),
            "sgd" => Ok(SolverKind::Sgd),
            "external-stub" | "external" => Ok(SolverKind::ExternalStub),
            other => Err(SolverError::Config(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaParams {
    /// Estimated from random flips when absent.
    pub initial_temp: Option<f64>,
    pub cooling: f64,
    /// Defaults to the problem size.
    pub steps_per_temp: Option<usize>,
    /// Defaults to `1e-3 * initial_temp`.
    pub final_temp: Option<f64>,
    /// Cardinality-preserving swap moves instead of single flips. Forced on
    /// under a hard constraint.
    pub swap_moves: bool,
}

impl Default for SaParams {
    fn default() -> Self {
        Self {
            initial_temp: None,
            cooling: 0.95,
            steps_per_temp: None,
            final_temp: None,
            swap_moves: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TabuParams {
    /// Defaults to `ceil(n / 10) + 3`.
    pub tenure: Option<usize>,
    /// Defaults to `50 * n`.
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdParams {
    /// Defaults to the inverse Lipschitz constant of the relaxed gradient.
    pub learning_rate: Option<f64>,
    pub iters: usize,
}

impl Default for SgdParams {
    fn default() -> Self {
        Self {
            learning_rate: None,
            iters: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub seed: u64,
    /// Independent restarts; the per-kind default applies when absent.
    pub num_samples: Option<usize>,
    pub execution: Execution,
    pub sa: SaParams,
    pub tabu: TabuParams,
    pub sgd: SgdParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(SolverKind::Sa, 0)
    }
}

impl SolverConfig {
    pub fn new(kind: SolverKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            num_samples: None,
            execution: Execution::default(),
            sa: SaParams::default(),
            tabu: TabuParams::default(),
            sgd: SgdParams::default(),
        }
    }

    pub fn with_samples(mut self, num_samples: usize) -> Self {
        self.num_samples = Some(num_samples);
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn samples(&self) -> usize {
        self.num_samples.unwrap_or_else(|| self.kind.default_samples())
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::Config(m.to_string()));
        if self.samples() == 0 {
            return bad("num_samples must be at least 1");
        }
        if !(self.sa.cooling > 0.0 && self.sa.cooling < 1.0) {
            return bad("cooling must lie in (0, 1)");
        }
        for t in [self.sa.initial_temp, self.sa.final_temp].into_iter().flatten() {
            if !(t.is_finite() && t > 0.0) {
                return bad("temperatures must be positive and finite");
            }
        }
        if let (Some(t0), Some(t1)) = (self.sa.initial_temp, self.sa.final_temp) {
            if t1 > t0 {
                return bad("final_temp exceeds initial_temp");
            }
        }
        if self.sa.steps_per_temp == Some(0) || self.tabu.tenure == Some(0) || self.tabu.max_iters == Some(0) {
            return bad("counts must be at least 1");
        }
        if self.sgd.iters == 0 {
            return bad("sgd iters must be at least 1");
        }
        if let Some(lr) = self.sgd.learning_rate {
            if !(lr.is_finite() && lr > 0.0) {
                return bad("learning_rate must be positive and finite");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub energy: f64,
    pub bits: BinarySolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub solver: SolverKind,
    pub best: BinarySolution,
    pub best_energy: f64,
    /// One entry per restart, in restart order.
    pub samples: Vec<Sample>,
    pub wall_time: Duration,
    /// Energy or move evaluations performed.
    pub evaluations: u64,
}

impl SolveResult {
    pub fn sample_energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.energy).collect()
    }
}

/// Dispatches on `config.kind`.
pub fn solve(problem: &QuboProblem, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    match config.kind {
        SolverKind::Exhaustive => solve_exhaustive(problem),
        SolverKind::Sa => solve_sa(problem, config),
        SolverKind::Tabu => solve_tabu(problem, config),
        SolverKind::Sgd => solve_sgd(problem, config),
        SolverKind::ExternalStub => external_sampler_submit(problem, &SamplerEndpoint::Loopback, config),
    }
}

/// Output of one restart before merging.
pub(crate) struct RestartOutcome {
    pub bits: Vec<u8>,
    pub evaluations: u64,
}

/// Runs `restart` for each index, rescoring every final state with the
/// reference energy so reported energies carry no incremental drift.
pub(crate) fn run_restarts<F>(
    problem: &QuboProblem,
    config: &SolverConfig,
    kind: SolverKind,
    restart: F,
) -> Result<SolveResult, SolverError>
where
    F: Fn(usize) -> RestartOutcome + Sync + Send,
{
    config.validate()?;
    let started = std::time::Instant::now();
    let outcomes = config.execution.map_range(config.samples(), restart);
    let mut evaluations = 0u64;
    let mut samples = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        evaluations += o.evaluations;
        let bits = BinarySolution::from_bits(o.bits);
        samples.push(Sample {
            energy: energy(problem, &bits)?,
            bits,
        });
    }
    let best = reduce(&samples).clone();
    Ok(SolveResult {
        solver: kind,
        best: best.bits,
        best_energy: best.energy,
        samples,
        wall_time: started.elapsed(),
        evaluations,
    })
}

/// Minimum energy, then lexicographically smallest bits.
pub(crate) fn reduce(samples: &[Sample]) -> &Sample {
    samples
        .iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.bits.cmp(&b.bits)))
        .expect("at least one sample")
}
