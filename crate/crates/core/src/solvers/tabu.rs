//! Tabu search over the single-flip neighborhood.

use super::anneal::{random_bits, random_k_hot};
use super::state::{FlipState, QuboModel};
use super::{run_restarts, RestartOutcome, SolveResult, SolverConfig, SolverError, SolverKind};
use crate::qubo::QuboProblem;
use crate::seed::rng_for;

pub(crate) fn default_tenure(n: usize) -> usize {
    n.div_ceil(10) + 3
}

fn tabu_once(model: &QuboModel, tenure: usize, max_iters: usize, seed: u64, restart: usize) -> RestartOutcome {
    let n = model.n;
    let hard = model.is_hard();
    let mut rng = rng_for(seed, restart as u64);
    let start = match (hard, model.k) {
        (true, Some(k)) => random_k_hot(n, k, &mut rng),
        _ if restart == 0 => vec![0; n],
        _ => random_bits(n, &mut rng),
    };
    let mut state = FlipState::new(model, start);
    let mut best_energy = state.energy();
    let mut best_bits = state.bits().to_vec();
    // iteration index until which a variable stays tabu
    let mut tabu_until = vec![0usize; n];
    let mut evaluations = 0u64;
    for iter in 1..=max_iters {
        let mut chosen: Option<(f64, usize, usize)> = None;
        let mut consider = |d: f64, a: usize, b: usize, is_tabu: bool, current: f64| {
            let aspirated = current + d < best_energy;
            if (!is_tabu || aspirated) && chosen.is_none_or(|c| d < c.0) {
                chosen = Some((d, a, b));
            }
        };
        let current = state.energy();
        if hard {
            for off in (0..n).filter(|&i| state.bits()[i] == 1) {
                for on in (0..n).filter(|&i| state.bits()[i] == 0) {
                    evaluations += 1;
                    let is_tabu = tabu_until[off] >= iter || tabu_until[on] >= iter;
                    consider(state.swap_delta(off, on), off, on, is_tabu, current);
                }
            }
        } else {
            for i in 0..n {
                evaluations += 1;
                consider(state.delta(i), i, i, tabu_until[i] >= iter, current);
            }
        }
        let Some((_, a, b)) = chosen else { break };
        if hard {
            state.swap(a, b);
            tabu_until[b] = iter + tenure;
        } else {
            state.flip(a);
        }
        tabu_until[a] = iter + tenure;
        if state.energy() < best_energy {
            best_energy = state.energy();
            best_bits.copy_from_slice(state.bits());
        }
    }
    RestartOutcome {
        bits: best_bits,
        evaluations,
    }
}

/// Steepest descent with a recency tabu list and aspiration on a new global
/// best. Stops after `max_iters` moves or when every move is tabu. Under a
/// hard constraint the neighborhood is swaps of a selected and an unselected
/// variable.
pub fn solve_tabu(problem: &QuboProblem, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    let model = QuboModel::new(problem);
    let n = model.n;
    let tenure = config.tabu.tenure.unwrap_or_else(|| default_tenure(n));
    let max_iters = config.tabu.max_iters.unwrap_or(50 * n.max(1));
    run_restarts(problem, config, SolverKind::Tabu, |r| {
        tabu_once(&model, tenure, max_iters, config.seed, r)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::CoefficientMatrix;

    #[test]
    fn descends_to_all_ones_on_negative_diagonal() {
        let p = QuboProblem::new(CoefficientMatrix::diagonal(&[-1.0; 7]), None).unwrap();
        let r = solve_tabu(&p, &SolverConfig::new(SolverKind::Tabu, 0).with_samples(1)).unwrap();
        assert_eq!(r.best.bits(), &[1; 7]);
        assert_eq!(r.best_energy, -7.0);
    }

    #[test]
    fn long_tenure_terminates() {
        let q = CoefficientMatrix::diagonal(&[1.0, 1.0, 1.0]);
        let p = QuboProblem::new(q, None).unwrap();
        let mut c = SolverConfig::new(SolverKind::Tabu, 0).with_samples(1);
        c.tabu.tenure = Some(100);
        c.tabu.max_iters = Some(1_000_000);
        let r = solve_tabu(&p, &c).unwrap();
        assert_eq!(r.best_energy, 0.0);
        // three uphill moves, then everything is tabu
        assert_eq!(r.evaluations, 12);
    }

    #[test]
    fn default_tenure_rule() {
        assert_eq!(default_tenure(1), 4);
        assert_eq!(default_tenure(10), 4);
        assert_eq!(default_tenure(11), 5);
        assert_eq!(default_tenure(150), 18);
    }
}
