//! CSV and JSON rendering.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

/// A cell of a CSV table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Rounds `v` to `digits` significant digits and prints the shortest
/// decimal that reads back as the rounded value.
pub fn format_sig(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), v)
        .parse()
        .expect("scientific notation round-trips");
    if rounded == 0.0 {
        return "0".to_owned();
    }
    let exp = rounded.abs().log10().floor();
    if (-5.0..16.0).contains(&exp) {
        rounded.to_string()
    } else {
        format!("{rounded:e}")
    }
}

pub fn csv_table(
    header: &[&str],
    rows: &[Vec<Cell>],
    precision: usize,
) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|c| match c {
            Cell::Num(v) => format_sig(*v, precision),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }))?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

/// `{meta, results}` document, pretty-printed with a trailing newline.
pub fn json_document<I, S, R>(
    command: &str,
    inputs: &I,
    solver: &S,
    results: &R,
) -> Result<Vec<u8>, CliError>
where
    I: Serialize,
    S: Serialize,
    R: Serialize,
{
    let doc: Value = json!({
        "meta": {
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "inputs": inputs,
            "solver": solver,
        },
        "results": results,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            fs::write(p, bytes).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}
