//! Column/row payload shared by every subcommand, rendered as CSV or JSON.
//!
//! Numbers print through Rust's shortest round-trip formatting, so outputs
//! are byte-stable and parse back to the exact same doubles.

use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v}"),
            Cell::Int(v) => format!("{v}"),
            Cell::Bool(v) => format!("{v}"),
            Cell::Text(s) => escape_csv(s),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Float(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

fn escape_csv(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&str>) -> Self {
        Self { columns: columns.into_iter().map(String::from).collect(), rows: Vec::new() }
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::to_csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> =
            self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::to_json).collect())).collect();
        let doc = json!({ "columns": self.columns, "rows": rows });
        format!("{doc}\n")
    }
}
