//! JSON and CSV serialization of suite reports.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::SuiteReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::usage(format!("unknown format {other:?} (json or csv)"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("report: {e}")))
    }

    /// One row per trial. Fixed columns come first, then every measured
    /// quantity that occurs in any trial, sorted by name; missing values are
    /// left empty.
    pub fn to_csv(&self) -> String {
        let keys: BTreeSet<&str> = self
            .trials
            .iter()
            .flat_map(|t| t.values.keys().map(String::as_str))
            .collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["index", "grid_index", "master_seed", "stream_index", "error"];
        header.extend(keys.iter().copied());
        w.write_record(&header).expect("in-memory write");
        for t in &self.trials {
            let mut row = vec![
                t.index.to_string(),
                t.grid_index.to_string(),
                t.seed.master_seed.to_string(),
                t.seed.stream_index.to_string(),
                t.error.clone().unwrap_or_default(),
            ];
            row.extend(keys.iter().map(|k| t.values.get(*k).map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

pub fn write_report(report: &SuiteReport, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, report.render(format)).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<SuiteReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SuiteReport::from_json(&text)
}
