use super::{output_dir, random_q, solver_config};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::report::{write_csv, write_json};
use crate::stats::{mean, std_dev};
use pdqubo::qubo::QuboProblem;
use pdqubo::seed::derive_seed;
use pdqubo::solvers::{solve, SolverKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub scale: usize,
    pub solver: SolverKind,
    pub rep: usize,
    pub secs: f64,
    pub evaluations: u64,
    pub best_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub solvers: Vec<SolverKind>,
    pub scales: Vec<usize>,
    /// `mean_secs[scale][solver]`.
    pub mean_secs: Vec<Vec<f64>>,
    pub std_secs: Vec<Vec<f64>>,
    pub rows: Vec<TimingRow>,
}

/// Wall time of each classical solver on a seeded random matrix per scale,
/// repeated at least three times.
pub fn cmd_timing(config: &ExperimentConfig) -> Result<TimingTable> {
    config.validate()?;
    let solvers: Vec<SolverKind> = config
        .solvers
        .iter()
        .copied()
        .filter(|k| matches!(k, SolverKind::Sa | SolverKind::Tabu | SolverKind::Sgd))
        .collect();
    if solvers.is_empty() {
        return Err(CliError::config(
            "timing",
            "no classical solver (sa, tabu, sgd) selected",
        ));
    }
    let reps = config.timing_reps.max(3);
    let mut rows = Vec::new();
    let mut mean_secs = Vec::new();
    let mut std_secs = Vec::new();
    for &scale in &config.scales {
        let seed = derive_seed(config.seed, scale as u64);
        let problem = QuboProblem::new(random_q(scale, seed), None).map_err(|e| CliError::config("problem", e))?;
        let (mut means, mut stds) = (Vec::new(), Vec::new());
        for &kind in &solvers {
            let mut secs = Vec::new();
            for rep in 0..reps {
                let mut sc = solver_config(config, kind, derive_seed(seed, rep as u64));
                sc.num_samples = Some(config.timing_samples);
                let result = solve(&problem, &sc).map_err(|e| CliError::solver("timing", e))?;
                let t = result.wall_time.as_secs_f64();
                secs.push(t);
                rows.push(TimingRow {
                    scale,
                    solver: kind,
                    rep,
                    secs: t,
                    evaluations: result.evaluations,
                    best_energy: result.best_energy,
                });
            }
            log::info!("scale {scale} {kind}: {:.4}s", mean(&secs));
            means.push(mean(&secs));
            stds.push(std_dev(&secs));
        }
        mean_secs.push(means);
        std_secs.push(stds);
    }
    let table = TimingTable {
        solvers,
        scales: config.scales.clone(),
        mean_secs,
        std_secs,
        rows,
    };
    if let Some(dir) = output_dir(config)? {
        write_json(&dir.join("timing.json"), &table)?;
        write_table(&dir.join("timing.csv"), &table)?;
        write_csv(&dir.join("timing_detail.csv"), table.rows.iter())?;
    }
    Ok(table)
}

fn write_table(path: &std::path::Path, table: &TimingTable) -> Result<()> {
    let fail = |e: csv::Error| CliError::data("output", format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    let mut header = vec!["scale".to_string()];
    for s in &table.solvers {
        header.push(format!("{s}_secs"));
        header.push(format!("{s}_std"));
    }
    w.write_record(&header).map_err(fail)?;
    for (i, scale) in table.scales.iter().enumerate() {
        let mut record = vec![scale.to_string()];
        for j in 0..table.solvers.len() {
            record.push(table.mean_secs[i][j].to_string());
            record.push(table.std_secs[i][j].to_string());
        }
        w.write_record(&record).map_err(fail)?;
    }
    w.flush()
        .map_err(|e| CliError::data("output", format!("{}: {e}", path.display())))
}
