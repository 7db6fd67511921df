//! Output rendering shared by the subcommands.
//!
//! Every command builds one in-memory table and renders it as a
//! machine-readable format (CSV or JSON, full precision) or a human table
//! (values rounded to 2 decimals). There is no recomputation between views.

use std::error::Error;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

/// One table cell; numbers keep full precision until rendering.
#[derive(Debug, Clone)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(i64),
    Missing,
}

impl Cell {
    pub fn text(s: &str) -> Cell {
        Cell::Text(s.to_string())
    }

    pub fn num(v: f64) -> Cell {
        Cell::Num(v)
    }

    pub fn int(v: i64) -> Cell {
        Cell::Int(v)
    }

    pub fn opt(v: Option<f64>) -> Cell {
        match v {
            Some(v) => Cell::Num(v),
            None => Cell::Missing,
        }
    }

    fn machine(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => format!("{v}"),
            Cell::Missing => String::new(),
        }
    }

    fn human(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(v) if v.is_nan() => "-".to_string(),
            Cell::Num(v) => format!("{v:.2}"),
            Cell::Int(v) => format!("{v}"),
            Cell::Missing => "-".to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Text(s) => serde_json::Value::String(s.clone()),
            Cell::Num(v) => serde_json::json!(v),
            Cell::Int(v) => serde_json::json!(v),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

/// A header row plus data rows.
#[derive(Debug, Clone)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Table {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn new_owned(headers: Vec<String>) -> Table {
        Table {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.headers.len(), "row width mismatch");
        self.rows.push(cells.to_vec());
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.headers.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(csv_field).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .headers
                    .iter()
                    .zip(row)
                    .map(|(h, c)| (h.clone(), c.json()))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }

    pub fn to_human(&self) -> String {
        let rendered: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(Cell::human).collect())
            .collect();
        let mut widths: Vec<usize> = self.headers.iter().map(String::len).collect();
        for row in &rendered {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        for (i, h) in self.headers.iter().enumerate() {
            let _ = write!(out, "{:<width$}  ", h, width = widths[i]);
        }
        out.push('\n');
        for (i, w) in widths.iter().enumerate() {
            out.push_str(&"-".repeat(*w));
            if i + 1 < widths.len() {
                out.push_str("  ");
            }
        }
        out.push('\n');
        for row in &rendered {
            for (i, cell) in row.iter().enumerate() {
                let _ = write!(out, "{:<width$}  ", cell, width = widths[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> Result<String, Box<dyn Error>> {
        Ok(match format {
            OutputFormat::Table => self.to_human(),
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => serde_json::to_string_pretty(&self.to_json())?,
        })
    }
}

fn csv_field(cell: &Cell) -> String {
    let s = cell.machine();
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

/// Renders several named tables into one document.
pub fn join_sections(
    sections: &[(&str, &Table)],
    format: OutputFormat,
) -> Result<String, Box<dyn Error>> {
    match format {
        OutputFormat::Json => {
            let obj: serde_json::Map<String, serde_json::Value> = sections
                .iter()
                .map(|(name, t)| (name.to_string(), t.to_json()))
                .collect();
            Ok(serde_json::to_string_pretty(&serde_json::Value::Object(
                obj,
            ))?)
        }
        _ => {
            let mut out = String::new();
            for (name, t) in sections {
                let _ = writeln!(out, "# {name}");
                out.push_str(&t.render(format)?);
                out.push('\n');
            }
            Ok(out)
        }
    }
}

/// Rounds to 2 decimals, half away from zero, matching the human table view.
pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

pub fn emit(table: &Table, format: OutputFormat, out: Option<&Path>) -> Result<(), Box<dyn Error>> {
    emit_text(&table.render(format)?, out)
}

pub fn emit_text(text: &str, out: Option<&Path>) -> Result<(), Box<dyn Error>> {
    match out {
        Some(path) => {
            let mut owned = text.to_string();
            if !owned.ends_with('\n') {
                owned.push('\n');
            }
            std::fs::write(path, owned)?;
        }
        None => println!("{text}"),
    }
    Ok(())
}
