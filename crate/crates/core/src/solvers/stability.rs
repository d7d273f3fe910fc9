//! Distribution of the best energy as a function of sample count.

use super::{solve, SolverConfig, SolverError};
use crate::qubo::QuboProblem;
use crate::seed::derive_seed;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyHistogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl EnergyHistogram {
    /// Equal-width bins over `[min, max]`; everything lands in the first bin
    /// when the values coincide.
    pub fn new(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0; bins];
        for &v in values {
            let b = if hi > lo {
                (((v - lo) / (hi - lo)) * bins as f64) as usize
            } else {
                0
            };
            counts[b.min(bins - 1)] += 1;
        }
        Self { lo, hi, counts }
    }

    pub fn edges(&self) -> Vec<f64> {
        let bins = self.counts.len();
        (0..=bins)
            .map(|b| self.lo + (self.hi - self.lo) * b as f64 / bins as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub sample_count: usize,
    /// Best energy of each outer repetition.
    pub sample_energies: Vec<f64>,
    pub min: f64,
    pub mean: f64,
    /// Population variance over repetitions.
    pub variance: f64,
    pub energy_histogram: EnergyHistogram,
}

impl StabilityReport {
    pub fn from_energies(sample_count: usize, sample_energies: Vec<f64>, bins: usize) -> Self {
        let n = sample_energies.len() as f64;
        let min = sample_energies.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = sample_energies.iter().sum::<f64>() / n;
        let variance = sample_energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
        let energy_histogram = EnergyHistogram::new(&sample_energies, bins);
        Self {
            sample_count,
            sample_energies,
            min,
            mean,
            variance,
            energy_histogram,
        }
    }
}

/// For each sample count `s`, the best energy over `s` restarts, repeated
/// `repetitions` times with seeds derived from `config.seed`.
///
/// Restart `r` of a run does not depend on how many restarts were requested,
/// so one run with `max(s)` restarts yields every smaller count as a prefix
/// minimum. The per-repetition minima are therefore nonincreasing in `s`.
pub fn sample_stability(
    problem: &QuboProblem,
    config: &SolverConfig,
    sample_counts: &[usize],
    repetitions: usize,
    bins: usize,
) -> Result<Vec<StabilityReport>, SolverError> {
    if sample_counts.is_empty() || sample_counts.contains(&0) {
        return Err(SolverError::Config(
            "sample counts must be nonempty and at least 1".into(),
        ));
    }
    if repetitions == 0 {
        return Err(SolverError::Config("repetitions must be at least 1".into()));
    }
    let largest = *sample_counts.iter().max().unwrap_or(&1);
    let mut minima = vec![Vec::with_capacity(repetitions); sample_counts.len()];
    for rep in 0..repetitions {
        let mut run_config = config.clone();
        run_config.seed = derive_seed(config.seed, rep as u64);
        run_config.num_samples = Some(largest);
        let result = solve(problem, &run_config)?;
        let energies = result.sample_energies();
        for (slot, &s) in minima.iter_mut().zip(sample_counts) {
            let prefix = &energies[..s.min(energies.len())];
            slot.push(prefix.iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    Ok(sample_counts
        .iter()
        .zip(minima)
        .map(|(&s, e)| StabilityReport::from_energies(s, e, bins))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::CoefficientMatrix;
    use crate::solvers::SolverKind;
    use rand::{Rng, SeedableRng};

    fn frustrated(n: usize, seed: u64) -> QuboProblem {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut q = CoefficientMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                q.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        QuboProblem::new(q, None).unwrap()
    }

    #[test]
    fn mean_of_minima_is_nonincreasing() {
        let p = frustrated(40, 1);
        let mut c = SolverConfig::new(SolverKind::Sa, 3);
        c.sa.cooling = 0.7;
        let reports = sample_stability(&p, &c, &[1, 2, 4, 8, 16], 20, 10).unwrap();
        for w in reports.windows(2) {
            assert!(w[1].mean <= w[0].mean);
            assert!(w[1].min <= w[0].min);
        }
        for r in &reports {
            assert!(r.min <= r.mean && r.variance >= 0.0);
            assert_eq!(r.energy_histogram.counts.iter().sum::<u64>(), 20);
        }
    }

    #[test]
    fn single_sample_report_is_raw_mean() {
        let p = frustrated(12, 2);
        let c = SolverConfig::new(SolverKind::Tabu, 8);
        let report = &sample_stability(&p, &c, &[1], 5, 4).unwrap()[0];
        let raw: Vec<f64> = (0..5)
            .map(|rep| {
                let mut rc = c.clone();
                rc.seed = derive_seed(8, rep);
                rc.num_samples = Some(1);
                solve(&p, &rc).unwrap().best_energy
            })
            .collect();
        assert_eq!(report.sample_energies, raw);
        assert_eq!(report.mean, raw.iter().sum::<f64>() / 5.0);
    }

    #[test]
    fn histogram_edges_and_degenerate_input() {
        let h = EnergyHistogram::new(&[0.0, 1.0, 2.0, 3.0], 3);
        assert_eq!(h.counts, vec![1, 1, 2]);
        assert_eq!(h.edges(), vec![0.0, 1.0, 2.0, 3.0]);
        let flat = EnergyHistogram::new(&[5.0, 5.0], 4);
        assert_eq!(flat.counts, vec![2, 0, 0, 0]);
    }
}
