//! Machine-readable run reports.

use crate::config::{Builder, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::stats::{mean, std_dev};
use pdqubo::solvers::SolverKind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// One (run, builder, solver, k) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run: usize,
    pub run_seed: u64,
    pub split_seed: u64,
    pub solver_seed: u64,
    pub builder: Builder,
    pub solver: SolverKind,
    pub k: String,
    /// `None` when the constraint is hard or absent.
    pub penalty_weight: Option<f64>,
    pub selected: Vec<usize>,
    pub cardinality: usize,
    /// Whether `|selected| = k`; `None` for `k = *`.
    pub cardinality_ok: Option<bool>,
    pub energy: f64,
    pub metric_before: f64,
    pub metric_after: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub planted_recovered: Option<usize>,
    pub evaluations: u64,
    pub build_secs: f64,
    pub solve_secs: f64,
}

impl RunRow {
    /// Everything except wall-clock fields.
    pub fn without_timing(&self) -> RunRow {
        RunRow {
            build_secs: 0.0,
            solve_secs: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub builder: Builder,
    pub solver: SolverKind,
    pub k: String,
    pub runs: usize,
    pub mean_metric_before: f64,
    pub mean_metric_after: f64,
    pub std_metric_after: f64,
    pub mean_energy: f64,
    pub mean_cardinality: f64,
    pub cardinality_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub generator: String,
    pub config: ExperimentConfig,
    pub run_seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub informative: Option<Vec<usize>>,
    pub rows: Vec<RunRow>,
    pub summary: Vec<SummaryRow>,
}

impl RunReport {
    pub fn new(
        config: ExperimentConfig,
        run_seeds: Vec<u64>,
        informative: Option<Vec<usize>>,
        rows: Vec<RunRow>,
    ) -> Self {
        let summary = summarize(&rows);
        Self {
            generator: concat!("pdqubo-cli ", env!("CARGO_PKG_VERSION")).into(),
            config,
            run_seeds,
            informative,
            rows,
            summary,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::data("report", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::data("report", format!("{}: {e}", path.display())))
    }

    /// Writes `report.json`, `rows.csv` and `summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("report.json"), self)?;
        write_csv(&dir.join("rows.csv"), self.rows.iter().map(CsvRow::from))?;
        write_csv(&dir.join("summary.csv"), self.summary.iter())
    }
}

/// Mean over runs per (builder, solver, k), in key order.
pub fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Builder, SolverKind, String), Vec<&RunRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.builder, r.solver, r.k.clone())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((builder, solver, k), rs)| {
            let col = |f: fn(&RunRow) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let after = col(|r| r.metric_after);
            SummaryRow {
                builder,
                solver,
                k,
                runs: rs.len(),
                mean_metric_before: mean(&col(|r| r.metric_before)),
                mean_metric_after: mean(&after),
                std_metric_after: std_dev(&after),
                mean_energy: mean(&col(|r| r.energy)),
                mean_cardinality: mean(&col(|r| r.cardinality as f64)),
                cardinality_violations: rs.iter().filter(|r| r.cardinality_ok == Some(false)).count(),
            }
        })
        .collect()
}

/// Flat CSV view of a [`RunRow`]; the selected set is space-separated.
#[derive(Serialize)]
struct CsvRow<'a> {
    run: usize,
    builder: Builder,
    solver: SolverKind,
    k: &'a str,
    cardinality: usize,
    cardinality_ok: Option<bool>,
    energy: f64,
    metric_before: f64,
    metric_after: f64,
    planted_recovered: Option<usize>,
    build_secs: f64,
    solve_secs: f64,
    selected: String,
}

impl<'a> From<&'a RunRow> for CsvRow<'a> {
    fn from(r: &'a RunRow) -> Self {
        Self {
            run: r.run,
            builder: r.builder,
            solver: r.solver,
            k: &r.k,
            cardinality: r.cardinality,
            cardinality_ok: r.cardinality_ok,
            energy: r.energy,
            metric_before: r.metric_before,
            metric_after: r.metric_after,
            planted_recovered: r.planted_recovered,
            build_secs: r.build_secs,
            solve_secs: r.solve_secs,
            selected: r.selected.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
        }
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::data("output", e))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::data("output", format!("{}: {e}", path.display())))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let err = |e: csv::Error| CliError::data("output", format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for row in rows {
        w.serialize(row).map_err(err)?;
    }
    w.flush()
        .map_err(|e| CliError::data("output", format!("{}: {e}", path.display())))
}
