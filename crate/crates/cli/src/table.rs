//! Tiny CSV emitter. Floats are written with `{:e}` (shortest scientific
//! form that round-trips), so files are byte-stable across runs and thread
//! counts and lose no precision.

use std::fmt::Write as _;
use std::path::Path;

use crate::fail::{io_at, CliResult};

#[derive(Debug, Clone)]
pub enum Cell {
    Int(i64),
    Uint(u64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Uint(v as u64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Uint(v)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

fn render(cell: &Cell, out: &mut String) {
    match cell {
        Cell::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Cell::Uint(v) => {
            let _ = write!(out, "{v}");
        }
        Cell::Float(v) => {
            let _ = write!(out, "{v:e}");
        }
        Cell::Bool(v) => {
            let _ = write!(out, "{v}");
        }
        Cell::Text(v) => {
            debug_assert!(
                !v.contains([',', '\n', '"']),
                "cell text must not need quoting: {v:?}"
            );
            out.push_str(v);
        }
    }
}

#[derive(Debug, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            header: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render(cell, &mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| io_at(path, e))
    }
}

/// Key/value lines for the stdout summary in CSV mode.
pub fn kv_csv(pairs: &[(&str, Cell)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in pairs {
        out.push_str(k);
        out.push(',');
        render(v, &mut out);
        out.push('\n');
    }
    out
}
