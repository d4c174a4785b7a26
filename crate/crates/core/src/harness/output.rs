//! CSV and JSON artifacts. Every file is written to a temporary sibling and
//! renamed into place, so an interrupted run never leaves a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::scheme::{ExperimentResult, SchemeKind};
use crate::error::{Error, Result};
use crate::optimizer::TraceRecord;
use crate::units::watts_to_dbm;

/// One line of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub axis: String,
    pub value: f64,
    pub seed: u64,
    pub power_dbm: f64,
    pub evals: usize,
    pub feasible: bool,
    pub trace_file: String,
}

impl ResultRow {
    pub fn new(result: &ExperimentResult, axis: &str, value: f64, trace_file: &str) -> Self {
        ResultRow {
            scheme: result.scheme.name().to_string(),
            axis: axis.to_string(),
            value,
            seed: result.seed,
            power_dbm: result.power_dbm(),
            evals: result.evaluations,
            feasible: result.feasible,
            trace_file: trace_file.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TraceRow {
    iteration: usize,
    residual_particles: usize,
    best_fitness_dbm: f64,
    penalty: f64,
    cum_evals: usize,
}

/// Everything needed to reproduce a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: Scenario,
    pub scheme: SchemeKind,
    pub seed: u64,
}

pub const RESULTS_FILE: &str = "results.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DROP_FILE: &str = "drop.json";

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn results_csv(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "scheme",
            "axis",
            "value",
            "seed",
            "power_dbm",
            "evals",
            "feasible",
            "trace_file",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<buffer>", e.into_error()))
}

pub fn trace_csv(trace: &[TraceRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if trace.is_empty() {
        w.write_record([
            "iteration",
            "residual_particles",
            "best_fitness_dbm",
            "penalty",
            "cum_evals",
        ])?;
    }
    for r in trace {
        w.serialize(TraceRow {
            iteration: r.iteration,
            residual_particles: r.residual_particles,
            best_fitness_dbm: watts_to_dbm(r.best_fitness),
            penalty: r.penalty,
            cum_evals: r.cumulative_evaluations,
        })?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<buffer>", e.into_error()))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// `(iteration, best_fitness_dbm)` pairs of a trace file.
pub fn read_trace(path: &Path) -> Result<Vec<(usize, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<TraceRow>()
        .map(|row| {
            row.map(|t| (t.iteration, t.best_fitness_dbm))
                .map_err(Error::from)
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&text)?)
}
