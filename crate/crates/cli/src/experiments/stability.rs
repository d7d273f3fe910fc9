use super::{make_problem, output_dir, random_q, solver_config};
use crate::config::{ExperimentConfig, KValue};
use crate::error::{CliError, Result};
use crate::report::{write_csv, write_json};
use pdqubo::qubo::QuboProblem;
use pdqubo::seed::derive_seed;
use pdqubo::solvers::{sample_stability, solve, SolverKind, StabilityReport};
use serde::{Deserialize, Serialize};

/// Unconstrained versus cardinality-constrained optimum on the same matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedComparison {
    pub scale: usize,
    pub k: usize,
    pub unconstrained_energy: f64,
    pub constrained_energy: f64,
    pub direction_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleStability {
    pub scale: usize,
    pub reports: Vec<StabilityReport>,
    pub comparison: ConstrainedComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityBundle {
    pub solver: SolverKind,
    pub scales: Vec<ScaleStability>,
}

#[derive(Serialize)]
struct HistogramRow {
    sample_count: usize,
    bin_lo: f64,
    bin_hi: f64,
    count: u64,
}

#[derive(Serialize)]
struct SummaryRow {
    scale: usize,
    sample_count: usize,
    min: f64,
    mean: f64,
    variance: f64,
}

/// Best-energy distributions over the scale and sample-count grids on
/// seeded random matrices, plus the constrained-versus-free comparison.
pub fn cmd_stability(config: &ExperimentConfig) -> Result<StabilityBundle> {
    config.validate()?;
    let kind = config.solvers[0];
    let largest = config.sample_counts.iter().copied().max().unwrap_or(1);
    let mut scales = Vec::new();
    for &scale in &config.scales {
        let seed = derive_seed(config.seed, scale as u64);
        let q = random_q(scale, seed);
        let free = QuboProblem::new(q.clone(), None).map_err(|e| CliError::config("problem", e))?;
        let reports = sample_stability(
            &free,
            &solver_config(config, kind, seed),
            &config.sample_counts,
            config.stability_reps,
            config.histogram_bins,
        )
        .map_err(|e| CliError::solver("stability", e))?;

        let k = ((config.constrained_fraction * scale as f64).round() as usize).clamp(1, scale);
        let constrained = make_problem(q, KValue::Fixed(k), config.penalty)?;
        let mut sc = solver_config(config, kind, seed);
        sc.num_samples = Some(largest);
        let best = |p: &QuboProblem| {
            solve(p, &sc)
                .map(|r| r.best_energy)
                .map_err(|e| CliError::solver("stability", e))
        };
        let (unconstrained_energy, constrained_energy) = (best(&free)?, best(&constrained)?);
        let direction_holds = unconstrained_energy <= constrained_energy;
        if !direction_holds {
            log::warn!("scale {scale}: unconstrained {unconstrained_energy} above constrained {constrained_energy}");
        }
        log::info!("scale {scale}: free {unconstrained_energy:.4}, k={k} {constrained_energy:.4}");
        scales.push(ScaleStability {
            scale,
            reports,
            comparison: ConstrainedComparison {
                scale,
                k,
                unconstrained_energy,
                constrained_energy,
                direction_holds,
            },
        });
    }
    let bundle = StabilityBundle { solver: kind, scales };
    if let Some(dir) = output_dir(config)? {
        write_json(&dir.join("stability.json"), &bundle)?;
        for s in &bundle.scales {
            let rows = s.reports.iter().flat_map(|r| {
                let edges = r.energy_histogram.edges();
                r.energy_histogram
                    .counts
                    .iter()
                    .enumerate()
                    .map(move |(b, &count)| HistogramRow {
                        sample_count: r.sample_count,
                        bin_lo: edges[b],
                        bin_hi: edges[b + 1],
                        count,
                    })
            });
            write_csv(&dir.join(format!("stability_scale_{}.csv", s.scale)), rows)?;
        }
        let summary = bundle.scales.iter().flat_map(|s| {
            s.reports.iter().map(move |r| SummaryRow {
                scale: s.scale,
                sample_count: r.sample_count,
                min: r.min,
                mean: r.mean,
                variance: r.variance,
            })
        });
        write_csv(&dir.join("stability_summary.csv"), summary)?;
        write_csv(
            &dir.join("constrained_vs_free.csv"),
            bundle.scales.iter().map(|s| &s.comparison),
        )?;
    }
    Ok(bundle)
}
