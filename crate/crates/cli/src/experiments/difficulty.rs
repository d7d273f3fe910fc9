use super::{build_q, output_dir, prepare_run, solve_cell, solver_seed};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{write_csv, write_json, RunRow};
use crate::stats::{mean, std_dev};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyRow {
    pub drop_fraction: f64,
    /// `(after - before) / before` per repetition.
    pub improvements: Vec<f64>,
    pub mean_improvement: f64,
    pub std_improvement: f64,
    pub runs: Vec<RunRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyReport {
    pub rows: Vec<DifficultyRow>,
}

#[derive(Serialize)]
struct CsvRow {
    drop_fraction: f64,
    reps: usize,
    mean_improvement: f64,
    std_improvement: f64,
    mean_metric_before: f64,
    mean_metric_after: f64,
}

/// Relative test-metric improvement of the selected subset over all
/// features after zeroing each share of feature values. Uses the first
/// configured k and solver.
pub fn cmd_difficulty(config: &ExperimentConfig) -> Result<DifficultyReport> {
    config.validate()?;
    let k = config.k.0[0];
    let kind = config.solvers[0];
    let mut rows = Vec::new();
    for &fraction in &config.drop_fractions {
        let mut runs = Vec::new();
        for rep in 0..config.difficulty_reps {
            let ctx = prepare_run(config, rep, Some(fraction))?;
            let built = build_q(config, &ctx, config.builder, None)?;
            runs.push(solve_cell(
                config,
                &ctx,
                config.builder,
                &built,
                k,
                kind,
                solver_seed(&ctx, 0),
            )?);
        }
        let improvements: Vec<f64> = runs
            .iter()
            .map(|r| {
                if r.metric_before > 0.0 {
                    (r.metric_after - r.metric_before) / r.metric_before
                } else {
                    0.0
                }
            })
            .collect();
        log::info!("drop {fraction}: mean improvement {:.4}", mean(&improvements));
        rows.push(DifficultyRow {
            drop_fraction: fraction,
            mean_improvement: mean(&improvements),
            std_improvement: std_dev(&improvements),
            improvements,
            runs,
        });
    }
    let report = DifficultyReport { rows };
    if let Some(dir) = output_dir(config)? {
        write_json(&dir.join("difficulty.json"), &report)?;
        let table = report.rows.iter().map(|r| CsvRow {
            drop_fraction: r.drop_fraction,
            reps: r.runs.len(),
            mean_improvement: r.mean_improvement,
            std_improvement: r.std_improvement,
            mean_metric_before: mean(&r.runs.iter().map(|x| x.metric_before).collect::<Vec<_>>()),
            mean_metric_after: mean(&r.runs.iter().map(|x| x.metric_after).collect::<Vec<_>>()),
        });
        write_csv(&dir.join("difficulty.csv"), table)?;
    }
    Ok(report)
}
