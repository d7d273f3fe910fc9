use super::{build_q, make_problem, output_dir, prepare_run, solver_config};
use crate::config::{Builder, ExperimentConfig, KValue};
use crate::error::{CliError, Result};
use crate::report::{write_csv, write_json};
use crate::stats::spearman;
use pdqubo::qubo::{energy, BinarySolution};
use pdqubo::seed::rng_for;
use pdqubo::solvers::{solve, SolverKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyPoint {
    pub energy: f64,
    pub metric: f64,
    pub source: String,
    pub selected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyPerfReport {
    pub builder: Builder,
    pub k: usize,
    pub num_points: usize,
    /// Spearman rank correlation between energy and the test metric; `None`
    /// when undefined.
    pub spearman: Option<f64>,
    pub points: Vec<EnergyPoint>,
}

/// Scores `num_solutions` distinct k-hot selections, half from annealing
/// samples and the rest uniformly random, by energy and test metric.
pub fn cmd_energy_vs_performance(config: &ExperimentConfig, builder: Builder) -> Result<EnergyPerfReport> {
    config.validate()?;
    let ctx = prepare_run(config, 0, None)?;
    let n = ctx.num_features();
    let k = config
        .k
        .0
        .iter()
        .find_map(|k| k.target())
        .unwrap_or(config.synth_informative)
        .min(n);
    let built = build_q(config, &ctx, builder, None)?;
    let problem = make_problem(built.q, KValue::Fixed(k), config.penalty)?;

    let mut chosen: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut sources = Vec::new();
    let mut sa = solver_config(config, SolverKind::Sa, ctx.extra_seed());
    sa.num_samples = Some((config.num_solutions / 2).max(1));
    let result = solve(&problem, &sa).map_err(|e| CliError::solver("solve", e))?;
    for s in result.samples {
        if s.bits.count_ones() == k && chosen.len() < config.num_solutions && chosen.insert(s.bits.bits().to_vec()) {
            sources.push((s.bits.bits().to_vec(), "solver"));
        }
    }
    let mut rng = rng_for(ctx.extra_seed(), 1);
    let mut attempts = 0;
    while chosen.len() < config.num_solutions && attempts < 50 * config.num_solutions {
        attempts += 1;
        let picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
        let bits = BinarySolution::from_indices(n, &picked).bits().to_vec();
        if chosen.insert(bits.clone()) {
            sources.push((bits, "random"));
        }
    }

    let scored = config
        .execution
        .map_slice(&sources, |(bits, source)| -> Result<EnergyPoint> {
            let x = BinarySolution::from_bits(bits.clone());
            let selected = x.selected();
            Ok(EnergyPoint {
                energy: energy(&problem, &x).map_err(|e| CliError::solver("energy", e))?,
                metric: ctx.metric_with(&selected)?,
                source: source.to_string(),
                selected: selected.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
            })
        });
    let points = scored.into_iter().collect::<Result<Vec<_>>>()?;
    let energies: Vec<f64> = points.iter().map(|p| p.energy).collect();
    let metrics: Vec<f64> = points.iter().map(|p| p.metric).collect();
    let rho = spearman(&energies, &metrics);
    if rho.is_none() {
        log::warn!("correlation undefined for {} points", points.len());
    }
    let report = EnergyPerfReport {
        builder,
        k,
        num_points: points.len(),
        spearman: rho,
        points,
    };
    if let Some(dir) = output_dir(config)? {
        write_json(&dir.join(format!("energy_vs_perf_{builder}.json")), &report)?;
        write_csv(&dir.join(format!("energy_vs_perf_{builder}.csv")), report.points.iter())?;
    }
    Ok(report)
}
