use std::io::Write;

use anyhow::Result;
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// A flat table for CSV output.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Result of one command before it is wrapped into a report.
pub struct Outcome {
    pub result: Value,
    pub table: Option<Table>,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct Report<'a> {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a Value,
    pub result: &'a Value,
    pub passed: bool,
}

impl<'a> Report<'a> {
    pub fn new(command: &'a str, config: &'a Value, outcome: &'a Outcome) -> Self {
        Self {
            schema: SCHEMA,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            result: &outcome.result,
            passed: outcome.passed,
        }
    }
}

pub fn write_report(out: &mut dyn Write, report: &Report, table: Option<&Table>, format: Format) -> Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let flat;
            let table = match table {
                Some(t) => t,
                None => {
                    flat = flatten(report.result);
                    &flat
                }
            };
            // Metadata as `#` comment lines ahead of the table.
            writeln!(out, "# schema: {}", report.schema)?;
            writeln!(out, "# tool: {} {}", report.tool, report.version)?;
            writeln!(out, "# command: {}", report.command)?;
            writeln!(out, "# config: {}", serde_json::to_string(report.config)?)?;
            writeln!(out, "# passed: {}", report.passed)?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&table.header)?;
            for row in &table.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// `key,value` rows with dotted paths for nested values.
pub fn flatten(value: &Value) -> Table {
    fn walk(prefix: &str, v: &Value, t: &mut Table) {
        match v {
            Value::Object(map) => {
                for (k, x) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, x, t);
                }
            }
            Value::Array(items) => {
                for (i, x) in items.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), x, t);
                }
            }
            Value::String(s) => t.push(vec![prefix.to_owned(), s.clone()]),
            other => t.push(vec![prefix.to_owned(), other.to_string()]),
        }
    }
    let mut t = Table::new(&["key", "value"]);
    walk("", value, &mut t);
    t
}

/// Shortest round-trip form, with exponents for small and large magnitudes.
pub fn num(x: f64) -> String {
    serde_json::Number::from_f64(x).map_or_else(|| x.to_string(), |n| n.to_string())
}
