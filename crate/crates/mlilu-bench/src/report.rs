//! CSV artifacts. `report.csv` holds only deterministic quantities;
//! wall times and memory go to `timings.csv`.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use mlilu::precond::LevelDiagnostics;

use crate::BenchError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub case: String,
    pub problem: String,
    pub dim: usize,
    pub nx: usize,
    pub unknowns: usize,
    pub partition: String,
    pub size: usize,
    pub levels: usize,
    pub retain: String,
    pub reynolds: f64,
    /// Linear iterations of the reported solve: the Stokes solve, or the
    /// first Newton step at the final Reynolds number.
    pub iterations: usize,
    pub newton_steps: usize,
    pub total_iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    /// Size of `S_ΣΣ` after every level, `;`-separated.
    pub sigma_dims: String,
    pub sigma_nnz: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub case: String,
    pub threads: usize,
    pub setup_s: f64,
    pub build_s: f64,
    pub solve_s: f64,
    pub total_s: f64,
    /// Process peak resident set (kB) when the OS reports it.
    pub peak_rss_kb_indicative: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub relative_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRow {
    pub reynolds: f64,
    pub newton_steps: usize,
    pub first_step_gmres: usize,
    pub final_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionRow {
    pub global_id: usize,
    pub level: usize,
    /// `interior`, `separator` or `retained-pressure`.
    pub class: String,
    /// Subdomain of an interior node or retained pressure, group of a
    /// separator.
    pub id: usize,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub level: usize,
    pub n: usize,
    pub nnz: usize,
    pub subdomains: usize,
    pub interior: usize,
    pub separators: usize,
    pub groups: usize,
    pub sigma: usize,
    pub sigma_nnz: usize,
    pub interior_factor_nnz: usize,
    pub numeric_fallbacks: usize,
}

impl From<&LevelDiagnostics> for DiagnosticsRow {
    fn from(d: &LevelDiagnostics) -> Self {
        Self {
            level: d.level,
            n: d.n,
            nnz: d.nnz,
            subdomains: d.subdomains,
            interior: d.interior,
            separators: d.separators,
            groups: d.groups,
            sigma: d.sigma,
            sigma_nnz: d.sigma_nnz,
            interior_factor_nnz: d.interior_factor_nnz,
            numeric_fallbacks: d.numeric_fallbacks,
        }
    }
}

/// Writes `rows` to a fresh file with a header.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Appends `rows`, writing the header only when the file is new or empty,
/// so reports from several runs concatenate into one parseable table.
pub fn append_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BenchError> {
    let fresh = std::fs::metadata(path)
        .map(|m| m.len() == 0)
        .unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(BenchError::from))
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BenchError> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

/// Peak resident set size in kB (`VmHWM`), Linux only.
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}
