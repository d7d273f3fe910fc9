use super::{build_q, output_dir, prepare_run, solve_cell, solver_seed, write_resolved_config, Artifacts};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::RunReport;

/// Data, profile, Q, solve and test-split scoring for every
/// (run, k, solver) cell. Writes `report.json`, `rows.csv`, `summary.csv`
/// and the resolved `config.toml` when an output directory is configured.
pub fn cmd_pipeline(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let out = output_dir(config)?;
    if let Some(dir) = out {
        write_resolved_config(config, dir)?;
    }
    let mut rows = Vec::new();
    let mut seeds = Vec::new();
    let mut informative = None;
    for run in 0..config.runs {
        let ctx = prepare_run(config, run, None)?;
        seeds.push(ctx.run_seed);
        informative = ctx.informative().map(<[usize]>::to_vec);
        let artifacts = out.map(|dir| Artifacts {
            dir,
            tag: format!("run{run}"),
        });
        let built = build_q(config, &ctx, config.builder, artifacts.as_ref())?;
        let mut cell = 0;
        for &k in &config.k.0 {
            for &kind in &config.solvers {
                let row = solve_cell(config, &ctx, config.builder, &built, k, kind, solver_seed(&ctx, cell))?;
                log::info!(
                    "run {run} {}/{kind} k={k}: Y={:.6} {} {:.4} -> {:.4}",
                    config.builder,
                    row.energy,
                    ctx.metric,
                    row.metric_before,
                    row.metric_after
                );
                rows.push(row);
                cell += 1;
            }
        }
    }
    let report = RunReport::new(config.clone(), seeds, informative, rows);
    if let Some(dir) = out {
        report.write(dir)?;
    }
    Ok(report)
}
