//! Simulated annealing with geometric cooling.

use super::state::{FlipState, QuboModel};
use super::{run_restarts, RestartOutcome, SolveResult, SolverConfig, SolverError, SolverKind};
use crate::qubo::QuboProblem;
use crate::seed::rng_for;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Stream reserved for temperature estimation, disjoint from restart streams.
const CALIBRATION_STREAM: u64 = u64::MAX;

pub(crate) fn random_bits(n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..=1u8)).collect()
}

pub(crate) fn random_k_hot(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut x = vec![0; n];
    for i in rand::seq::index::sample(rng, n, k) {
        x[i] = 1;
    }
    x
}

/// Uniformly random (1 -> 0, 0 -> 1) index pair, or `None` when the state is
/// all zeros or all ones.
pub(crate) fn random_swap(state: &FlipState, rng: &mut ChaCha8Rng) -> Option<(usize, usize)> {
    let n = state.bits().len();
    let ones = state.ones();
    if ones == 0 || ones == n {
        return None;
    }
    let a = rng.gen_range(0..ones);
    let b = rng.gen_range(0..n - ones);
    let (mut seen_on, mut seen_off) = (0, 0);
    let (mut off, mut on) = (usize::MAX, usize::MAX);
    for (i, &bit) in state.bits().iter().enumerate() {
        if bit == 1 {
            if seen_on == a {
                off = i;
            }
            seen_on += 1;
        } else {
            if seen_off == b {
                on = i;
            }
            seen_off += 1;
        }
    }
    Some((off, on))
}

struct Plan {
    swap: bool,
    t0: f64,
    t_final: f64,
    steps: usize,
    cooling: f64,
}

fn start_state(model: &QuboModel, swap: bool, rng: &mut ChaCha8Rng) -> Vec<u8> {
    match (swap, model.k) {
        (true, Some(k)) => random_k_hot(model.n, k, rng),
        _ => random_bits(model.n, rng),
    }
}

/// Population standard deviation of the move deltas seen on 100 random
/// moves from a random start; 1.0 when the landscape is flat.
fn estimate_initial_temp(model: &QuboModel, swap: bool, seed: u64) -> f64 {
    let mut rng = rng_for(seed, CALIBRATION_STREAM);
    let mut state = FlipState::new(model, start_state(model, swap, &mut rng));
    let mut deltas = Vec::with_capacity(100);
    for _ in 0..100 {
        if swap {
            let Some((off, on)) = random_swap(&state, &mut rng) else {
                break;
            };
            deltas.push(state.swap_delta(off, on));
            state.swap(off, on);
        } else {
            let i = rng.gen_range(0..model.n);
            deltas.push(state.delta(i));
            state.flip(i);
        }
    }
    if deltas.is_empty() {
        return 1.0;
    }
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let var = deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / deltas.len() as f64;
    let sd = var.sqrt();
    if sd.is_finite() && sd > 0.0 {
        sd
    } else {
        1.0
    }
}

/// Greedy best-improvement descent to a local minimum.
fn quench(state: &mut FlipState, swap: bool, evaluations: &mut u64) {
    let n = state.bits().len();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        if swap {
            for off in (0..n).filter(|&i| state.bits()[i] == 1) {
                for on in (0..n).filter(|&i| state.bits()[i] == 0) {
                    let d = state.swap_delta(off, on);
                    *evaluations += 1;
                    if d < 0.0 && best.is_none_or(|b| d < b.0) {
                        best = Some((d, off, on));
                    }
                }
            }
        } else {
            for i in 0..n {
                let d = state.delta(i);
                *evaluations += 1;
                if d < 0.0 && best.is_none_or(|b| d < b.0) {
                    best = Some((d, i, i));
                }
            }
        }
        match best {
            None => return,
            Some((_, a, b)) if swap => state.swap(a, b),
            Some((_, i, _)) => state.flip(i),
        }
    }
}

fn anneal_once(model: &QuboModel, plan: &Plan, seed: u64, restart: usize) -> RestartOutcome {
    let mut rng = rng_for(seed, restart as u64);
    let mut state = FlipState::new(model, start_state(model, plan.swap, &mut rng));
    let mut evaluations = 0u64;
    let mut best_bits = state.bits().to_vec();
    let mut best_energy = state.energy();
    let mut temp = plan.t0;
    'chain: while temp > plan.t_final {
        for _ in 0..plan.steps {
            let (d, mv) = if plan.swap {
                let Some((off, on)) = random_swap(&state, &mut rng) else {
                    break 'chain;
                };
                (state.swap_delta(off, on), (off, on))
            } else {
                let i = rng.gen_range(0..model.n);
                (state.delta(i), (i, i))
            };
            evaluations += 1;
            if d <= 0.0 || rng.gen::<f64>() < (-d / temp).exp() {
                if plan.swap {
                    state.swap(mv.0, mv.1);
                } else {
                    state.flip(mv.0);
                }
                if state.energy() < best_energy {
                    best_energy = state.energy();
                    best_bits.copy_from_slice(state.bits());
                }
            }
        }
        temp *= plan.cooling;
    }
    quench(&mut state, plan.swap, &mut evaluations);
    let mut from_best = FlipState::new(model, best_bits);
    quench(&mut from_best, plan.swap, &mut evaluations);
    let bits = if from_best.energy() < state.energy() {
        from_best.bits().to_vec()
    } else {
        state.bits().to_vec()
    };
    RestartOutcome { bits, evaluations }
}

/// Single-flip Metropolis chains (swap moves when requested or when the
/// constraint is hard), each finished with a greedy quench.
pub fn solve_sa(problem: &QuboProblem, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    solve_sa_tagged(problem, config, SolverKind::Sa)
}

pub(crate) fn solve_sa_tagged(
    problem: &QuboProblem,
    config: &SolverConfig,
    tag: SolverKind,
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let model = QuboModel::new(problem);
    let swap = config.sa.swap_moves || model.is_hard();
    if swap && model.k.is_none() {
        return Err(SolverError::Config("swap moves need a cardinality target".into()));
    }
    let t0 = match config.sa.initial_temp {
        Some(t) => t,
        None if model.n == 0 => 1.0,
        None => estimate_initial_temp(&model, swap, config.seed),
    };
    let t_final = config.sa.final_temp.unwrap_or(1e-3 * t0).min(t0);
    let plan = Plan {
        swap,
        t0,
        t_final,
        steps: config.sa.steps_per_temp.unwrap_or(model.n.max(1)),
        cooling: config.sa.cooling,
    };
    log::debug!("sa: n={} t0={t0:.4e} t_final={t_final:.4e} swap={swap}", model.n);
    if model.n == 0 {
        return run_restarts(problem, config, tag, |_| RestartOutcome {
            bits: Vec::new(),
            evaluations: 0,
        });
    }
    run_restarts(problem, config, tag, |r| anneal_once(&model, &plan, config.seed, r))
}
