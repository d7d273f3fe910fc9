//! Brute-force ground truth for small problems.

use super::state::{FlipState, QuboModel};
use super::{Sample, SolveResult, SolverError, SolverKind};
use crate::qubo::{energy, BinarySolution, QuboProblem};
use std::time::Instant;

pub const EXHAUSTIVE_LIMIT: usize = 24;

/// Keeps every state whose incrementally tracked energy lies within `tol`
/// of the running minimum; the survivors are rescored exactly.
struct NearTies {
    best: f64,
    tol: f64,
    masks: Vec<u32>,
}

impl NearTies {
    fn offer(&mut self, e: f64, mask: u32) {
        if e < self.best - self.tol {
            self.best = e;
            self.masks.clear();
            self.masks.push(mask);
        } else if e <= self.best + self.tol {
            self.best = self.best.min(e);
            self.masks.push(mask);
        }
    }
}

fn bits_of(mask: u32, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

/// Global minimum by enumeration: Gray-code order over all `2^n` states, or
/// only the `n choose k` feasible states under a hard constraint. Ties go to
/// the lexicographically smallest bit vector.
pub fn solve_exhaustive(problem: &QuboProblem) -> Result<SolveResult, SolverError> {
    let n = problem.size();
    if n > EXHAUSTIVE_LIMIT {
        return Err(SolverError::TooLarge {
            size: n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let started = Instant::now();
    let model = QuboModel::new(problem);
    let scale = 1.0
        + model.linear.iter().map(|v| v.abs()).sum::<f64>()
        + model.pair.iter().map(|v| v.abs()).sum::<f64>() / 2.0
        + if model.is_hard() || model.k.is_none() {
            0.0
        } else {
            model.weight * (n * n) as f64
        };
    let mut ties = NearTies {
        best: f64::INFINITY,
        tol: 1e-9 * scale,
        masks: Vec::new(),
    };
    let evaluations;
    if model.is_hard() {
        let k = model.k.unwrap_or(0);
        let mut count = 0u64;
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let mut e = 0.0;
            let mut mask = 0u32;
            for (a, &i) in idx.iter().enumerate() {
                mask |= 1 << i;
                e += model.linear[i];
                for &j in &idx[a + 1..] {
                    e += model.coupling(i, j);
                }
            }
            ties.offer(e, mask);
            count += 1;
            // next combination in lexicographic index order
            let mut pos = k;
            while pos > 0 && idx[pos - 1] == n - k + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for p in pos..k {
                idx[p] = idx[p - 1] + 1;
            }
        }
        evaluations = count;
    } else {
        let mut state = FlipState::new(&model, vec![0; n]);
        let mut mask = 0u32;
        ties.offer(state.energy(), mask);
        let total = 1u64 << n;
        for t in 1..total {
            let i = t.trailing_zeros() as usize;
            state.flip(i);
            mask ^= 1 << i;
            ties.offer(state.energy(), mask);
        }
        evaluations = total;
    }
    let mut best: Option<Sample> = None;
    for mask in ties.masks {
        let bits = BinarySolution::from_bits(bits_of(mask, n));
        let e = energy(problem, &bits)?;
        let better = match &best {
            None => true,
            Some(b) => e < b.energy || (e == b.energy && bits < b.bits),
        };
        if better {
            best = Some(Sample { energy: e, bits });
        }
    }
    let best = best.expect("enumeration visits at least one state");
    Ok(SolveResult {
        solver: SolverKind::Exhaustive,
        best: best.bits.clone(),
        best_energy: best.energy,
        samples: vec![best],
        wall_time: started.elapsed(),
        evaluations,
    })
}
