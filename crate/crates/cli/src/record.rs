//! Run records and their JSON-lines / CSV serializations.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One executed check. Everything except `wall_time_s` and `timestamp` is
/// a pure function of the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
    pub passed: bool,
    pub payload: Value,
    pub version: String,
    pub wall_time_s: f64,
    pub timestamp: String,
}

impl RunRecord {
    /// The record with its clock fields blanked, for determinism checks.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_s: 0.0,
            timestamp: String::new(),
            ..self.clone()
        }
    }
}

/// A sweep table for CSV output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub fn write_json_line(out: &mut dyn Write, record: &RunRecord) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")
}

/// Writes each table with a `#`-prefixed preamble (command, version,
/// parameters, rule descriptors) followed by a header row.
pub fn write_csv(out: &mut dyn Write, record: &RunRecord, tables: &[Table], preamble: &[(String, String)]) -> std::io::Result<()> {
    for table in tables {
        writeln!(out, "# command: {}", record.command)?;
        writeln!(out, "# table: {}", table.name)?;
        writeln!(out, "# version: {}", record.version)?;
        writeln!(
            out,
            "# parameters: {}",
            serde_json::to_string(&record.parameters).map_err(std::io::Error::other)?
        )?;
        for (k, v) in preamble {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(&mut *out);
        w.write_record(&table.columns).map_err(std::io::Error::other)?;
        for row in &table.rows {
            w.write_record(row).map_err(std::io::Error::other)?;
        }
        w.flush()?;
        drop(w);
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> RunRecord {
        RunRecord {
            command: "sharpness".into(),
            parameters: BTreeMap::from([("seed".to_string(), Value::from(7))]),
            warnings: vec![],
            passed: true,
            payload: serde_json::json!({"x": 1.5}),
            version: VERSION.into(),
            wall_time_s: 0.25,
            timestamp: "2024-01-01T00:00:00Z".into(),
        }
    }

    #[test]
    fn json_roundtrip() {
        let r = record();
        let mut buf = Vec::new();
        write_json_line(&mut buf, &r).unwrap();
        let back: RunRecord = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, r);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.find("\"command\"").unwrap() < text.find("\"payload\"").unwrap());
    }

    #[test]
    fn csv_has_preamble_and_header() {
        let mut t = Table::new("sweep", &["epsilon", "quotient", "margin"]);
        t.push(vec!["0.2".into(), "2.5".into(), "0.25".into()]);
        let mut buf = Vec::new();
        write_csv(&mut buf, &record(), &[t], &[("rule".into(), "radial".into())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# command: sharpness"));
        assert!(lines.contains(&"epsilon,quotient,margin"));
        assert!(lines.contains(&"# rule: radial"));
    }
}
