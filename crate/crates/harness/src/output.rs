//! On-disk layout of an experiment run:
//!
//! ```text
//! <out>/traces/<instance>__<solver>.csv
//! <out>/summary.csv
//! <out>/manifest.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rcsn_core::{IterationRecord, RunSummary};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::runner::ExperimentResult;

pub const TRACE_DIR: &str = "traces";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub phi: f64,
    pub w_norm: f64,
    pub d_norm: f64,
    pub tau: f64,
    pub rho: f64,
    pub backtracks: usize,
    pub wall_ns: u128,
}

impl From<&IterationRecord> for TraceRow {
    fn from(r: &IterationRecord) -> Self {
        Self {
            k: r.k,
            phi: r.phi,
            w_norm: r.w_norm,
            d_norm: r.d_norm,
            tau: r.tau,
            rho: r.rho,
            backtracks: r.backtracks,
            wall_ns: r.wall_ns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub library_version: String,
    pub seeds: Vec<u64>,
    pub runs: usize,
    pub config: ExperimentConfig,
    /// Every other file in the output directory, sorted by path.
    pub files: Vec<FileEntry>,
}

pub fn trace_file_name(instance_id: &str, solver: &str) -> String {
    format!("{instance_id}__{solver}.csv")
}

pub fn trace_path(out_dir: &Path, instance_id: &str, solver: &str) -> PathBuf {
    out_dir.join(TRACE_DIR).join(trace_file_name(instance_id, solver))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

pub fn write_trace(path: &Path, records: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in records {
        w.serialize(TraceRow::from(r))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| io_err(path, e))).collect()
}

pub fn write_summary(path: &Path, rows: &[RunSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<RunSummary>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| io_err(path, e))).collect()
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Writes traces, the summary, and finally the manifest hashing both.
pub fn write_all(result: &ExperimentResult, out_dir: &Path) -> Result<Manifest> {
    let traces = out_dir.join(TRACE_DIR);
    fs::create_dir_all(&traces).map_err(|e| io_err(&traces, e))?;
    let mut written = Vec::with_capacity(result.runs.len() + 1);
    for run in &result.runs {
        let name = trace_file_name(&run.instance_id, &run.solver);
        write_trace(&traces.join(&name), &run.records)?;
        written.push(format!("{TRACE_DIR}/{name}"));
    }
    write_summary(&out_dir.join(SUMMARY_FILE), &result.summaries())?;
    written.push(SUMMARY_FILE.to_string());
    written.sort();

    let files = written
        .into_iter()
        .map(|path| {
            let (sha256, bytes) = sha256_file(&out_dir.join(&path))?;
            Ok(FileEntry { path, sha256, bytes })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        name: result.config.name.clone(),
        library_version: rcsn_core::VERSION.to_string(),
        seeds: result.config.seeds(),
        runs: result.runs.len(),
        config: result.config.clone(),
        files,
    };
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| io_err(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(out_dir: &Path) -> Result<Manifest> {
    let path = out_dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
