//! CSV tables with a `#`-prefixed JSON header line.

use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub config: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(config: Value, columns: &[&str]) -> Self {
        Table { config, columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column, skipping text cells.
    pub fn values(&self, name: &str) -> Vec<f64> {
        let Some(k) = self.column(name) else { return Vec::new() };
        self.rows.iter().filter_map(|r| r[k].as_f64()).collect()
    }

    pub fn text(&self, row: usize, name: &str) -> Option<&str> {
        match &self.rows[row][self.column(name)?] {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn check_finite(&self) -> CliResult<()> {
        for (i, row) in self.rows.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                if let Cell::Num(v) = cell {
                    if !v.is_finite() {
                        return Err(CliError::NonFinite { row: i, column: self.columns[j].clone() });
                    }
                }
            }
        }
        Ok(())
    }

    /// Column header and rows, without the config line.
    pub fn body(&self) -> CliResult<String> {
        self.check_finite()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Io { path: "<csv>".into(), message: e.to_string() };
        w.write_record(&self.columns).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io { path: "<csv>".into(), message: e.to_string() })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_csv(&self) -> CliResult<String> {
        Ok(format!("# {}\n{}", self.config, self.body()?))
    }
}

/// Splits a CSV produced by [`Table::to_csv`] into its config line and body.
pub fn split_header(text: &str) -> (Option<&str>, &str) {
    match text.strip_prefix("# ") {
        Some(rest) => match rest.split_once('\n') {
            Some((header, body)) => (Some(header), body),
            None => (Some(rest), ""),
        },
        None => (None, text),
    }
}
