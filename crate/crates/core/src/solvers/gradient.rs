//! Projected gradient descent on the box relaxation `x in [0, 1]^n`.

use super::state::QuboModel;
use super::{run_restarts, RestartOutcome, SolveResult, SolverConfig, SolverError, SolverKind};
use crate::qubo::QuboProblem;
use crate::seed::rng_for;
use rand::Rng;

/// `x^T M x + w (sum x - k)^2` with `M` the symmetric form of the problem.
/// Under a hard constraint the penalty is dropped from the relaxation and
/// cardinality is enforced by rounding.
struct Relaxation {
    n: usize,
    m: Vec<f64>,
    k: Option<f64>,
    weight: f64,
}

impl Relaxation {
    fn new(problem: &QuboProblem) -> Self {
        let model = QuboModel::new(problem);
        let n = model.n;
        let mut m: Vec<f64> = model.pair.iter().map(|c| c / 2.0).collect();
        for i in 0..n {
            m[i * n + i] = model.linear[i];
        }
        let weight = if model.is_hard() || model.k.is_none() {
            0.0
        } else {
            model.weight
        };
        Self {
            n,
            m,
            k: model.k.map(|k| k as f64),
            weight,
        }
    }

    fn gap(&self, x: &[f64]) -> f64 {
        match self.k {
            Some(k) => x.iter().sum::<f64>() - k,
            None => 0.0,
        }
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut quad = 0.0;
        for i in 0..n {
            let row = &self.m[i * n..(i + 1) * n];
            quad += x[i] * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        let gap = self.gap(x);
        quad + self.weight * gap * gap
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let shift = 2.0 * self.weight * self.gap(x);
        for (i, g) in out.iter_mut().enumerate() {
            let row = &self.m[i * n..(i + 1) * n];
            *g = 2.0 * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + shift;
        }
    }

    /// Inverse Lipschitz bound of the gradient.
    fn default_step(&self) -> f64 {
        let n = self.n;
        let row_max = (0..n)
            .map(|i| self.m[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let lipschitz = 2.0 * row_max + 2.0 * self.weight * n as f64;
        if lipschitz > 0.0 {
            1.0 / lipschitz
        } else {
            1.0
        }
    }
}

/// Relaxed objective at a point of the box.
pub fn relaxed_energy(problem: &QuboProblem, x: &[f64]) -> f64 {
    Relaxation::new(problem).energy(x)
}

/// Analytic gradient `(Q + Q^T) x + 2 w (sum x - k) 1` of [`relaxed_energy`].
pub fn relaxed_gradient(problem: &QuboProblem, x: &[f64]) -> Vec<f64> {
    let r = Relaxation::new(problem);
    let mut g = vec![0.0; r.n];
    r.gradient_into(x, &mut g);
    g
}

/// Top-`k` coordinates when a target is set (ties to the lower index),
/// otherwise threshold at 0.5.
fn round(x: &[f64], k: Option<usize>) -> Vec<u8> {
    match k {
        Some(k) => {
            let mut order: Vec<usize> = (0..x.len()).collect();
            order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
            let mut bits = vec![0; x.len()];
            for &i in &order[..k] {
                bits[i] = 1;
            }
            bits
        }
        None => x.iter().map(|&v| u8::from(v >= 0.5)).collect(),
    }
}

/// Each restart starts from a uniform random interior point, takes `iters`
/// projected gradient steps, then rounds.
pub fn solve_sgd(problem: &QuboProblem, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    let relax = Relaxation::new(problem);
    let step = config.sgd.learning_rate.unwrap_or_else(|| relax.default_step());
    let iters = config.sgd.iters;
    run_restarts(problem, config, SolverKind::Sgd, |r| {
        let mut rng = rng_for(config.seed, r as u64);
        let mut x: Vec<f64> = (0..relax.n).map(|_| rng.gen::<f64>()).collect();
        let mut g = vec![0.0; relax.n];
        for _ in 0..iters {
            relax.gradient_into(&x, &mut g);
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi = (*xi - step * gi).clamp(0.0, 1.0);
            }
        }
        RestartOutcome {
            bits: round(&x, problem.k),
            evaluations: iters as u64,
        }
    })
}
