//! Plain CSV series for external plotting, built from a finished run
//! directory. Nothing is rendered here.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rcsn_core::RunSummary;
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::output::{read_summary, read_trace, trace_path, SUMMARY_FILE};

pub const PLOT_DIR: &str = "plots";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// `φ(x_k)` against `k` for every run.
    Objective,
    /// Objective and accepted stepsize on a shared iteration axis.
    Stepsize,
    /// Per-instance iteration, time and score ratios against a reference solver.
    Ratio,
}

impl PlotKind {
    pub fn file_name(self) -> &'static str {
        match self {
            Self::Objective => "objective.csv",
            Self::Stepsize => "stepsize.csv",
            Self::Ratio => "ratio.csv",
        }
    }
}

#[derive(Serialize)]
struct ObjectiveRow<'a> {
    instance_id: &'a str,
    solver: &'a str,
    k: usize,
    phi: f64,
}

#[derive(Serialize)]
struct StepsizeRow<'a> {
    instance_id: &'a str,
    solver: &'a str,
    k: usize,
    phi: f64,
    tau: f64,
    backtracks: usize,
}

#[derive(Serialize)]
struct RatioRow<'a> {
    instance_id: &'a str,
    seed: u64,
    solver: &'a str,
    reference: &'a str,
    iter_ratio: f64,
    time_ratio: f64,
    score_diff: f64,
}

fn last_wall_ns(out_dir: &Path, row: &RunSummary) -> Result<u128> {
    Ok(read_trace(&trace_path(out_dir, &row.instance_id, &row.solver))?.last().map_or(0, |r| r.wall_ns))
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::NAN
    } else {
        a / b
    }
}

/// Writes `plots/<kind>.csv` under `out_dir`. `reference` selects the
/// baseline solver for ratio plots and defaults to the first solver listed in
/// the summary.
pub fn emit_plot_data(out_dir: &Path, kind: PlotKind, reference: Option<&str>) -> Result<PathBuf> {
    let summary = read_summary(&out_dir.join(SUMMARY_FILE))?;
    let dir = out_dir.join(PLOT_DIR);
    fs::create_dir_all(&dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(kind.file_name());
    let mut w = csv::Writer::from_path(&path)?;

    match kind {
        PlotKind::Objective | PlotKind::Stepsize => {
            for row in &summary {
                for t in read_trace(&trace_path(out_dir, &row.instance_id, &row.solver))? {
                    let (id, solver) = (row.instance_id.as_str(), row.solver.as_str());
                    if kind == PlotKind::Objective {
                        w.serialize(ObjectiveRow { instance_id: id, solver, k: t.k, phi: t.phi })?;
                    } else {
                        w.serialize(StepsizeRow {
                            instance_id: id,
                            solver,
                            k: t.k,
                            phi: t.phi,
                            tau: t.tau,
                            backtracks: t.backtracks,
                        })?;
                    }
                }
            }
        }
        PlotKind::Ratio => {
            let reference = match reference {
                Some(r) => r.to_string(),
                None => summary
                    .first()
                    .map(|r| r.solver.clone())
                    .ok_or_else(|| HarnessError::Config("summary is empty".into()))?,
            };
            let base: BTreeMap<&str, &RunSummary> = summary
                .iter()
                .filter(|r| r.solver == reference)
                .map(|r| (r.instance_id.as_str(), r))
                .collect();
            if base.is_empty() {
                return Err(HarnessError::Config(format!("reference solver {reference:?} not in summary")));
            }
            for row in summary.iter().filter(|r| r.solver != reference) {
                let Some(b) = base.get(row.instance_id.as_str()) else { continue };
                w.serialize(RatioRow {
                    instance_id: &row.instance_id,
                    seed: row.seed,
                    solver: &row.solver,
                    reference: &reference,
                    iter_ratio: ratio(row.iters as f64, b.iters as f64),
                    time_ratio: ratio(last_wall_ns(out_dir, row)? as f64, last_wall_ns(out_dir, b)? as f64),
                    score_diff: row.score - b.score,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(path)
}
