//! Incremental energy bookkeeping for bit flips and swaps.

use crate::qubo::QuboProblem;

/// Problem in coupling form: `sum a_i x_i + sum_{i<j} J_ij x_i x_j`
/// plus the cardinality penalty.
#[derive(Debug, Clone)]
pub(crate) struct QuboModel {
    pub n: usize,
    pub linear: Vec<f64>,
    /// Dense symmetric `n x n`, zero diagonal.
    pub pair: Vec<f64>,
    pub k: Option<usize>,
    pub weight: f64,
}

impl QuboModel {
    pub fn new(problem: &QuboProblem) -> Self {
        let (linear, pair) = problem.couplings();
        Self {
            n: problem.size(),
            linear,
            pair,
            k: problem.k,
            weight: problem.penalty_weight,
        }
    }

    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.pair[i * self.n + j]
    }

    pub fn is_hard(&self) -> bool {
        self.k.is_some() && self.weight.is_infinite()
    }

    fn penalty(&self, ones: usize) -> f64 {
        match self.k {
            None => 0.0,
            Some(k) if self.weight.is_infinite() => {
                if ones == k {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Some(k) => {
                let gap = ones as f64 - k as f64;
                self.weight * gap * gap
            }
        }
    }
}

/// Current assignment with local fields `field_i = sum_j J_ij x_j`.
///
/// Under a hard cardinality constraint single flips are infeasible
/// (`delta` is `+inf`); use [`FlipState::swap`] instead.
#[derive(Debug, Clone)]
pub struct FlipState<'m> {
    model: &'m QuboModel,
    x: Vec<u8>,
    field: Vec<f64>,
    ones: usize,
    energy: f64,
}

impl<'m> FlipState<'m> {
    pub(crate) fn new(model: &'m QuboModel, x: Vec<u8>) -> Self {
        let n = model.n;
        let mut field = vec![0.0; n];
        let mut energy = 0.0;
        for j in 0..n {
            if x[j] == 1 {
                for (i, f) in field.iter_mut().enumerate() {
                    *f += model.coupling(i, j);
                }
                energy += model.linear[j];
                for i in j + 1..n {
                    if x[i] == 1 {
                        energy += model.coupling(j, i);
                    }
                }
            }
        }
        let ones = x.iter().filter(|&&b| b == 1).count();
        energy += model.penalty(ones);
        Self {
            model,
            x,
            field,
            ones,
            energy,
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.x
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    /// Energy change of flipping bit `i`.
    #[inline]
    pub fn delta(&self, i: usize) -> f64 {
        let step = if self.x[i] == 0 { 1.0 } else { -1.0 };
        let quad = step * (self.model.linear[i] + self.field[i]);
        match self.model.k {
            None => quad,
            Some(_) if self.model.weight.is_infinite() => f64::INFINITY,
            Some(k) => {
                let gap = self.ones as f64 - k as f64;
                quad + self.model.weight * (2.0 * step * gap + 1.0)
            }
        }
    }

    /// Energy change of turning `off` (currently 1) to 0 and `on`
    /// (currently 0) to 1. Cardinality, hence the penalty, is unchanged.
    #[inline]
    pub fn swap_delta(&self, off: usize, on: usize) -> f64 {
        debug_assert!(self.x[off] == 1 && self.x[on] == 0);
        -(self.model.linear[off] + self.field[off]) + (self.model.linear[on] + self.field[on])
            - self.model.coupling(off, on)
    }

    pub fn flip(&mut self, i: usize) {
        self.energy += self.delta(i);
        self.toggle(i);
    }

    pub fn swap(&mut self, off: usize, on: usize) {
        self.energy += self.swap_delta(off, on);
        self.toggle(off);
        self.toggle(on);
    }

    fn toggle(&mut self, i: usize) {
        let n = self.model.n;
        let row = &self.model.pair[i * n..(i + 1) * n];
        if self.x[i] == 0 {
            self.x[i] = 1;
            self.ones += 1;
            for (f, &c) in self.field.iter_mut().zip(row) {
                *f += c;
            }
        } else {
            self.x[i] = 0;
            self.ones -= 1;
            for (f, &c) in self.field.iter_mut().zip(row) {
                *f -= c;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::{energy, BinarySolution, CoefficientMatrix};
    use rand::{Rng, SeedableRng};

    fn random_problem(n: usize, seed: u64, k: Option<usize>) -> QuboProblem {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut q = CoefficientMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                q.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        QuboProblem::new(q, k).unwrap().with_penalty(2.5).unwrap()
    }

    #[test]
    fn incremental_energy_tracks_full_recompute() {
        let p = random_problem(30, 1, Some(12));
        let model = QuboModel::new(&p);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut state = FlipState::new(&model, vec![0; 30]);
        let check = |s: &FlipState| {
            let exact = energy(&p, &BinarySolution::from_bits(s.bits().to_vec())).unwrap();
            assert!((s.energy() - exact).abs() <= 1e-9, "drift {}", s.energy() - exact);
        };
        for step in 0..1_000_000u32 {
            let i = rng.gen_range(0..30);
            let predicted = state.energy() + state.delta(i);
            state.flip(i);
            assert_eq!(state.energy(), predicted);
            if step % 4099 == 0 {
                check(&state);
            }
        }
        check(&state);
    }

    #[test]
    fn swaps_preserve_cardinality() {
        let p = random_problem(10, 3, Some(4)).with_penalty(f64::INFINITY).unwrap();
        let model = QuboModel::new(&p);
        let mut state = FlipState::new(&model, vec![1, 1, 1, 1, 0, 0, 0, 0, 0, 0]);
        assert!(state.delta(0).is_infinite());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let on: Vec<usize> = (0..10).filter(|&i| state.bits()[i] == 1).collect();
            let off: Vec<usize> = (0..10).filter(|&i| state.bits()[i] == 0).collect();
            state.swap(on[rng.gen_range(0..on.len())], off[rng.gen_range(0..off.len())]);
            assert_eq!(state.ones(), 4);
        }
        let exact = energy(&p, &BinarySolution::from_bits(state.bits().to_vec())).unwrap();
        assert!((state.energy() - exact).abs() < 1e-9);
    }
}
