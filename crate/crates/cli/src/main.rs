use clap::{Args, Parser, Subcommand};
use pdqubo_cli::config::{Builder, ExperimentConfig, Overrides};
use pdqubo_cli::error::{CliError, Result};
use pdqubo_cli::experiments::{
    cmd_difficulty, cmd_energy_vs_performance, cmd_pipeline, cmd_stability, cmd_synth, cmd_timing, cmd_validate_q,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(
    name = "pdqubo",
    version,
    about = "Counterfactual QUBO feature selection experiments"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML config, or a JSON report whose embedded config is reused.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated solver names: exhaustive, sa, tabu, sgd, external-stub.
    #[arg(long, global = true)]
    solver: Option<String>,
    /// pdqubo, pdqubo-indiv, miqubo, coqubo or boosting.
    #[arg(long, global = true)]
    builder: Option<String>,
    /// Comma-separated cardinalities; `*` leaves the cardinality free.
    #[arg(long, global = true)]
    k: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Select features for every (k, solver) cell and score them on the test split.
    Pipeline,
    /// Energy versus test metric over sampled k-hot selections.
    EnergyVsPerf {
        #[arg(long)]
        num_solutions: Option<usize>,
    },
    /// Best-energy distributions across scales and sample counts.
    Stability,
    /// Improvement of the selected subset as feature values are dropped.
    Difficulty {
        /// Comma-separated drop fractions in [0, 1).
        #[arg(long)]
        drop: Option<String>,
    },
    /// Classical solver wall times per scale.
    Timing,
    /// Write a synthetic corpus to the output directory.
    Synth,
    /// Check a coefficient matrix file (JSON or triplets).
    ValidateQ { path: PathBuf },
}

fn load_config(global: &Global) -> Result<ExperimentConfig> {
    let mut config = match &global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.apply(&Overrides {
        out: global.out.clone(),
        seed: global.seed,
        solvers: global.solver.clone(),
        builder: global.builder.clone(),
        k: global.k.clone(),
    })?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    if let Command::ValidateQ { path } = &cli.command {
        let report = cmd_validate_q(path)?;
        out!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(|e| CliError::data("output", e))?
        );
        return Ok(());
    }
    let mut config = load_config(&cli.global)?;
    match cli.command {
        Command::Pipeline => {
            let report = cmd_pipeline(&config)?;
            for s in &report.summary {
                out!(
                    "{} {} k={}: {} {:.4} -> {:.4} (+/- {:.4}, {} runs)",
                    s.builder,
                    s.solver,
                    s.k,
                    config.metric,
                    s.mean_metric_before,
                    s.mean_metric_after,
                    s.std_metric_after,
                    s.runs
                );
            }
        }
        Command::EnergyVsPerf { num_solutions } => {
            if let Some(n) = num_solutions {
                config.num_solutions = n;
            }
            let builder: Builder = config.builder;
            let report = cmd_energy_vs_performance(&config, builder)?;
            match report.spearman {
                Some(rho) => out!(
                    "{builder} k={}: spearman {rho:.4} over {} points",
                    report.k,
                    report.num_points
                ),
                None => out!(
                    "{builder} k={}: spearman undefined over {} points",
                    report.k,
                    report.num_points
                ),
            }
        }
        Command::Stability => {
            let bundle = cmd_stability(&config)?;
            for s in &bundle.scales {
                let c = &s.comparison;
                out!(
                    "n={}: free {:.4}, k={} {:.4}, best per sample count {:?}",
                    s.scale,
                    c.unconstrained_energy,
                    c.k,
                    c.constrained_energy,
                    s.reports.iter().map(|r| r.mean).collect::<Vec<_>>()
                );
            }
        }
        Command::Difficulty { drop } => {
            if let Some(list) = drop {
                config.drop_fractions = list
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|e| CliError::config("config", format!("drop {s:?}: {e}")))
                    })
                    .collect::<Result<_>>()?;
                config.validate()?;
            }
            for r in cmd_difficulty(&config)?.rows {
                out!(
                    "drop {}: improvement {:.4} +/- {:.4}",
                    r.drop_fraction,
                    r.mean_improvement,
                    r.std_improvement
                );
            }
        }
        Command::Timing => {
            let table = cmd_timing(&config)?;
            for (i, scale) in table.scales.iter().enumerate() {
                let cells: Vec<String> = table
                    .solvers
                    .iter()
                    .zip(&table.mean_secs[i])
                    .map(|(s, t)| format!("{s} {t:.4}s"))
                    .collect();
                out!("n={scale}: {}", cells.join(", "));
            }
        }
        Command::Synth => {
            let manifest = cmd_synth(&config)?;
            out!("informative features: {:?}", manifest.informative);
        }
        Command::ValidateQ { .. } => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
