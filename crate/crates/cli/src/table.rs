//! Column-oriented numeric tables and their CSV/JSON encodings.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use thiserror::Error;

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    /// May hold NaN for undefined values.
    pub nullable: bool,
}

/// Rectangular table of numbers with an ordered metadata block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputTable {
    pub metadata: Vec<(String, String)>,
    columns: Vec<Column>,
    rows: Vec<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("row has {got} values, table has {expected} columns")]
    RowWidth { expected: usize, got: usize },
    #[error("column '{0}' is not nullable but received NaN")]
    UnexpectedNan(String),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl OutputTable {
    pub fn new(columns: Vec<Column>) -> Self {
        Self {
            metadata: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn with_metadata(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.push((key.to_string(), value.into()));
        self
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<(), TableError> {
        if row.len() != self.columns.len() {
            return Err(TableError::RowWidth {
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        if let Some(col) = self.columns.iter().zip(&row).find(|(c, v)| !c.nullable && v.is_nan()) {
            return Err(TableError::UnexpectedNan(col.0.name.clone()));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn col(name: &str) -> Column {
    Column {
        name: name.to_string(),
        nullable: false,
    }
}

pub fn nullable(name: &str) -> Column {
    Column {
        name: name.to_string(),
        nullable: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// `%.12g`: twelve significant digits, trailing zeros trimmed, exponent form
/// outside `[1e-4, 1e12)`. NaN is written as `nan`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn to_csv(table: &OutputTable) -> String {
    let mut out = String::new();
    for (k, v) in &table.metadata {
        for (i, line) in v.lines().enumerate() {
            if i == 0 {
                out.push_str(&format!("# {k}: {line}\n"));
            } else {
                out.push_str(&format!("#   {line}\n"));
            }
        }
        if v.is_empty() {
            out.push_str(&format!("# {k}:\n"));
        }
    }
    let header: Vec<&str> = table.columns.iter().map(|c| c.name.as_str()).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn to_json(table: &OutputTable) -> String {
    let metadata: Map<String, Value> = table
        .metadata
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    let columns: Map<String, Value> = table
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let values = table
                .rows
                .iter()
                .map(|r| json_number(r[i]))
                .collect();
            (c.name.clone(), Value::Array(values))
        })
        .collect();
    let mut root = Map::new();
    root.insert("metadata".into(), Value::Object(metadata));
    root.insert("columns".into(), Value::Object(columns));
    let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("serializable table");
    text.push('\n');
    text
}

/// Rounded to [`SIGNIFICANT_DIGITS`]; non-finite values become `null`.
fn json_number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format_number(x).parse().expect("formatted number parses");
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

pub fn render(table: &OutputTable, format: Format) -> String {
    match format {
        Format::Csv => to_csv(table),
        Format::Json => to_json(table),
    }
}

/// Writes the table to `path`, or to stdout when `path` is `None`.
pub fn emit_output(table: &OutputTable, path: Option<&Path>, format: Format) -> Result<(), TableError> {
    let text = render(table, format);
    match path {
        Some(p) => fs::write(p, text).map_err(|source| TableError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            use io::Write;
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| TableError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

/// Parses CSV written by [`to_csv`]: metadata and header, then rows.
pub fn parse_csv(text: &str) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse::<f64>().ok()).collect::<Option<Vec<f64>>>())
        .collect::<Option<Vec<_>>>()?;
    Some((header, rows))
}
