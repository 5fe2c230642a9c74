//! Result records and plot series written by every command.

use crate::config::RunConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sglab::SgError;
use sha2::{Digest, Sha256};
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Named pass/fail outcome with a short human-readable detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Verdict { name: name.to_string(), passed, detail: detail.into() }
    }
}

/// Machine-readable error of a failed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorField {
    pub kind: String,
    pub message: String,
}

impl From<&SgError> for ErrorField {
    fn from(e: &SgError) -> Self {
        ErrorField { kind: e.kind().to_string(), message: e.to_string() }
    }
}

/// Columns and rows of a CSV plot series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Series { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<T: ToString>(&mut self, row: &[T]) {
        self.rows.push(row.iter().map(|v| v.to_string()).collect());
    }
}

/// Everything a command reports. `values` and `verdicts` are deterministic
/// for a given config; timings are kept apart from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub command: String,
    pub artifact_version: String,
    pub config_hash: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub wall_time_s: f64,
    pub values: Value,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    pub error: Option<ErrorField>,
    /// CSV files written next to the record.
    pub series: Vec<String>,
}

pub fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// SHA-256 of the config serialized as JSON with the output directory left out.
pub fn config_hash(config: &RunConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    format!("{:x}", Sha256::digest(&bytes))
}

/// File stem `propagator_eval` for the command path `propagator eval`.
pub fn file_stem(command: &str) -> String {
    command.split_whitespace().collect::<Vec<_>>().join("_")
}

/// Writes `<stem>.json` and one `<stem>_<series>.csv` per series; returns the record path.
pub fn write_outputs(dir: &Path, record: &mut ResultRecord, series: &[Series]) -> io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let stem = file_stem(&record.command);
    record.series.clear();
    for s in series {
        let name = format!("{stem}_{}.csv", s.name);
        let mut w = csv::Writer::from_path(dir.join(&name)).map_err(io::Error::other)?;
        w.write_record(&s.columns).map_err(io::Error::other)?;
        for row in &s.rows {
            w.write_record(row).map_err(io::Error::other)?;
        }
        w.flush()?;
        record.series.push(name);
    }
    let path = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(record).map_err(io::Error::other)?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_values_not_on_output_dir() {
        let mut a = RunConfig::default();
        let h0 = config_hash(&a);
        a.output_dir = Some("/tmp/elsewhere".into());
        assert_eq!(config_hash(&a), h0);
        a.quadrature.seed += 1;
        assert_ne!(config_hash(&a), h0);
        assert_eq!(h0.len(), 64);
    }

    #[test]
    fn stems() {
        assert_eq!(file_stem("smatrix unitarity"), "smatrix_unitarity");
        assert_eq!(file_stem("report"), "report");
    }
}
