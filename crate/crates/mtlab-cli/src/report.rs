//! Versioned JSON report. Given the same config and seed the report is
//! byte-identical except for the timestamp, which occupies its own line in
//! the header block so consumers can strip it before diffing.

use serde::Serialize;
use serde_json::Value;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

pub const SCHEMA: &str = "mtlab/1";

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &'static str, passed: bool, detail: String) -> Check {
        Check { name, passed, detail }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub version: &'static str,
    pub timestamp_unix_ms: u128,
    pub command: String,
    /// Everything needed to reproduce: seeds, degrees, tolerances, φ specs.
    pub inputs: Value,
    pub results: Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &str, inputs: Value, results: Value, checks: Vec<Check>) -> Report {
        Report {
            schema: SCHEMA,
            version: env!("CARGO_PKG_VERSION"),
            timestamp_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            command: command.to_string(),
            inputs,
            results,
            checks,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Pretty JSON to `out` when given, stdout otherwise.
    pub fn write(&self, out: Option<&Path>) -> std::io::Result<()> {
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        match out {
            Some(path) => {
                let mut f = std::fs::File::create(path)?;
                writeln!(f, "{body}")
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                writeln!(stdout, "{body}")
            }
        }
    }
}

/// A plot-ready table destined for CSV (header row + RFC-style quoting via
/// the csv crate's defaults).
#[derive(Debug)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}
