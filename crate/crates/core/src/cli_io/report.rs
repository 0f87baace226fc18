//! JSON reports and CSV tables. Nothing time- or host-dependent is written,
//! so identical inputs give byte-identical outputs.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Format, InputRecord};
use crate::error::{Error, Result};

/// Envelope shared by every subcommand report.
#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    /// The configuration text exactly as read.
    pub config: String,
    pub inputs: Vec<InputRecord>,
    pub result: T,
}

/// A header row plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let to_io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.header).map_err(to_io)?;
        for r in &self.rows {
            w.write_record(r).map_err(to_io)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Files produced by one invocation, in writing order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
    /// The JSON report, also available when JSON output is disabled.
    pub report: serde_json::Value,
}

pub(crate) struct Writer<'a> {
    pub dir: &'a Path,
    pub formats: &'a [Format],
    pub out: Outputs,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.out.files.push(path);
        Ok(())
    }

    pub fn raw(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.write(name, bytes)
    }

    pub fn report<T: Serialize>(&mut self, name: &str, report: &Report<T>) -> Result<()> {
        let value = serde_json::to_value(report)
            .map_err(|e| Error::Numerical(format!("report encoding: {e}")))?;
        if self.formats.contains(&Format::Json) {
            let mut text =
                serde_json::to_vec_pretty(&value).map_err(|e| Error::Io(e.to_string()))?;
            text.push(b'\n');
            self.write(&format!("{name}.json"), &text)?;
        }
        self.out.report = value;
        Ok(())
    }

    pub fn table(&mut self, name: &str, table: &Table) -> Result<()> {
        if self.formats.contains(&Format::Csv) {
            self.write(&format!("{name}.csv"), &table.to_csv()?)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_and_csv_quotes() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        let mut t = Table::new(vec!["scale".into(), "a,b".into()]);
        t.push(vec![num(0.5), num(2.0)]);
        assert_eq!(
            String::from_utf8(t.to_csv().unwrap()).unwrap(),
            "scale,\"a,b\"\n0.5,2.0\n"
        );
    }
}
