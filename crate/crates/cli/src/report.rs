//! Report bundles and CSV tables.
//!
//! A bundle is a JSON document with three members: `meta` (tool version,
//! command, seed, timestamp), `scenario` (the scenario text verbatim) and
//! `data`. Only `meta.timestamp_unix` changes between re-runs of the same
//! scenario. Floats are written in shortest round-trip form.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::CliError;

pub const TOOL: &str = "hpqkd";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub timestamp_unix: u64,
}

impl Meta {
    pub fn now(command: &'static str, seed: u64) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            seed,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle<'a, T: Serialize> {
    pub meta: Meta,
    pub scenario: &'a str,
    pub data: &'a T,
}

/// A plot-ready table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Cell text for a number; `None` becomes an empty cell.
pub fn cell<T: ToString>(value: T) -> String {
    value.to_string()
}

pub fn opt_cell<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// `report.json` + `sessions` → `report.sessions.csv`.
pub fn table_path(bundle: &Path, table: &str) -> PathBuf {
    let stem = bundle
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    bundle.with_file_name(format!("{stem}.{table}.csv"))
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn write_bundle<T: Serialize>(
    path: &Path,
    bundle: &ReportBundle<'_, T>,
) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let mut text =
        serde_json::to_string_pretty(bundle).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn write_table(path: &Path, table: &Table) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(&table.header)
        .map_err(|e| io_error(path, e))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_paths_sit_next_to_the_bundle() {
        assert_eq!(
            table_path(Path::new("out/run.json"), "sessions"),
            PathBuf::from("out/run.sessions.csv")
        );
        assert_eq!(
            table_path(Path::new("run"), "fits"),
            PathBuf::from("run.fits.csv")
        );
    }

    #[test]
    fn cells_round_trip_floats() {
        let x = 0.1 + 0.2;
        assert_eq!(cell(x).parse::<f64>().unwrap(), x);
        assert_eq!(opt_cell::<f64>(None), "");
    }
}
