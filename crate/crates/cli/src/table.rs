//! Homogeneous result tables and their CSV/JSON emission.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::Format;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Real(f64),
}

impl Cell {
    /// CSV text; reals carry 17 significant digits.
    pub fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format!("{x:.16e}"),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => json!(s),
            Cell::Int(i) => json!(i),
            // Non-finite reals become null.
            Cell::Real(x) => json!(x),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<u32> for Cell {
    fn from(i: u32) -> Self {
        Cell::Int(i64::from(i))
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &'static str, columns: &'static [&'static str]) -> Self {
        Table { command, columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from the {} header", self.command);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut buf = format!("# esqpt-lab v{VERSION} {}\n", self.command).into_bytes();
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
            let io = |e: csv::Error| CliError::Io { path: "<csv buffer>".into(), source: e.into() };
            w.write_record(self.columns).map_err(io)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::render)).map_err(io)?;
            }
            w.flush().map_err(|source| CliError::Io { path: "<csv buffer>".into(), source })?;
        }
        Ok(buf)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({
            "generator": format!("esqpt-lab v{VERSION}"),
            "command": self.command,
            "columns": self.columns,
            "rows": rows,
        });
        let mut text = serde_json::to_vec_pretty(&doc).expect("tables serialize");
        text.push(b'\n');
        text
    }
}

/// Writes `table` to `path`, or to standard output when `path` is `None`.
pub fn emit_table(table: &Table, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    if table.rows.is_empty() {
        log::warn!("{}: no rows to write; emitting the header only", table.command);
    }
    let bytes = match format {
        Format::Csv => table.to_csv()?,
        Format::Json => table.to_json(),
    };
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}
