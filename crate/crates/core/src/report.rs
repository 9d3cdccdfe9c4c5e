//! Report artifacts: a schema-versioned `report.json`, CSV sidecars and a
//! separate `timing.json` holding the only non-reproducible number.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

pub const REPORT_SCHEMA: &str = "hypstab.report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

/// A CSV sidecar; written as `<name>.csv` with `columns` as the header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

/// Shorthand for a CSV cell.
pub fn cell(x: impl std::fmt::Display) -> String {
    x.to_string()
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: Value,
    pub verdicts: Vec<Verdict>,
    pub data: Value,
    /// Sidecar file names, in write order.
    pub sidecars: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    #[serde(skip)]
    pub wall_clock_seconds: Option<f64>,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config,
            verdicts: Vec::new(),
            data: Value::Null,
            sidecars: Vec::new(),
            tables: Vec::new(),
            wall_clock_seconds: None,
        }
    }

    pub fn add_table(&mut self, t: Table) {
        self.sidecars.push(t.file_name());
        self.tables.push(t);
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serialisable");
        s.push('\n');
        s
    }
}

/// Write `report.json`, the sidecars and `timing.json` into `dir` (created if needed).
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("report.json");
    std::fs::write(&path, report.to_json())?;
    written.push(path);
    for t in &report.tables {
        let path = dir.join(t.file_name());
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&t.columns)?;
        for row in &t.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        written.push(path);
    }
    let path = dir.join("timing.json");
    let timing = serde_json::json!({ "wall_clock_seconds": report.wall_clock_seconds });
    std::fs::write(&path, serde_json::to_string_pretty(&timing)? + "\n")?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("hypstab-report-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn empty_verdicts_is_valid_json() {
        let dir = tmp("empty");
        let r = Report::new("check-cauchy", 0, Value::Null);
        emit_report(&r, &dir).unwrap();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
        assert_eq!(v["verdicts"], serde_json::json!([]));
        assert_eq!(v["schema"], REPORT_SCHEMA);
        assert!(r.passed());
    }

    #[test]
    fn csv_has_header_even_when_empty() {
        let dir = tmp("csv");
        let mut r = Report::new("simulate", 3, Value::Null);
        r.add_table(Table::new("series", &["n", "energy"]));
        emit_report(&r, &dir).unwrap();
        assert_eq!(std::fs::read_to_string(dir.join("series.csv")).unwrap(), "n,energy\n");
    }

    #[test]
    fn timing_stays_out_of_the_report() {
        let (a, b) = (tmp("ta"), tmp("tb"));
        let mut r = Report::new("simulate", 1, serde_json::json!({"dx": 0.5}));
        r.verdicts.push(Verdict::new("finite", true, ""));
        r.wall_clock_seconds = Some(1.0);
        emit_report(&r, &a).unwrap();
        r.wall_clock_seconds = Some(2.0);
        emit_report(&r, &b).unwrap();
        assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
        assert_ne!(std::fs::read(a.join("timing.json")).unwrap(), std::fs::read(b.join("timing.json")).unwrap());
    }
}
