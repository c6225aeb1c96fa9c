//! In-memory command results and their serialization.
//!
//! Commands build a complete [`Report`] before anything touches the disk, so
//! a failing command leaves no partial output behind.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use nmrqc_core::format_float;

use crate::config::Format;
use crate::CliError;

/// JSON number for finite values, null otherwise.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Everything one command writes.
pub struct Report {
    pub command: String,
    pub summary: Vec<(String, Value)>,
    pub tables: Vec<Table>,
    /// Files with a fixed schema of their own, written verbatim in any format.
    pub files: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: command.into(), summary: Vec::new(), tables: Vec::new(), files: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.push((key.into(), value.into()));
    }

    pub fn set_f(&mut self, key: &str, value: f64) {
        self.summary.push((key.into(), num(value)));
    }

    pub fn summary_value(&self, key: &str) -> Option<&Value> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.to_string(),
            (_, Some(u)) => u.to_string(),
            _ => format_float(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_text(header: Option<&str>, columns: &[String], rows: &[Vec<Value>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(columns).map_err(CliError::io)?;
    for r in rows {
        w.write_record(r.iter().map(cell)).map_err(CliError::io)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| CliError::io(e.into_error()))?).map_err(CliError::io)?;
    Ok(match header {
        Some(h) => format!("{h}\n{body}"),
        None => body,
    })
}

/// Serialized files (name, contents) for `report` in `format`.
///
/// `meta` is the header line prefixed to CSV files and stored under
/// `"meta"` in JSON reports.
pub fn render(report: &Report, format: Format, meta: Option<&str>) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let csv_header = meta.map(|m| format!("# {m}"));
    match format {
        Format::Csv => {
            let rows: Vec<Vec<Value>> =
                report.summary.iter().map(|(k, v)| vec![Value::String(k.clone()), v.clone()]).collect();
            let summary = csv_text(csv_header.as_deref(), &["key".into(), "value".into()], &rows)?;
            out.push((format!("{}_summary.csv", report.command), summary));
            for t in &report.tables {
                out.push((format!("{}.csv", t.name), csv_text(csv_header.as_deref(), &t.columns, &t.rows)?));
            }
        }
        Format::Json => {
            let mut root = Map::new();
            if let Some(m) = meta {
                root.insert("meta".into(), Value::String(m.into()));
            }
            root.insert("command".into(), Value::String(report.command.clone()));
            let summary: Map<String, Value> = report.summary.iter().cloned().collect();
            root.insert("summary".into(), Value::Object(summary));
            let mut tables = Map::new();
            for t in &report.tables {
                let mut obj = Map::new();
                obj.insert("columns".into(), t.columns.iter().cloned().map(Value::String).collect());
                obj.insert("rows".into(), t.rows.iter().map(|r| Value::Array(r.clone())).collect());
                tables.insert(t.name.clone(), Value::Object(obj));
            }
            root.insert("tables".into(), Value::Object(tables));
            let text = serde_json::to_string_pretty(&Value::Object(root)).map_err(CliError::io)? + "\n";
            out.push((format!("{}.json", report.command), text));
        }
    }
    for (name, contents) in &report.files {
        let text = match (&csv_header, name.ends_with(".csv")) {
            (Some(h), true) => format!("{h}\n{contents}"),
            _ => contents.clone(),
        };
        out.push((name.clone(), text));
    }
    Ok(out)
}

/// Writes every file, each through a temporary name so a crash mid-write
/// never leaves a truncated file under its final name.
pub fn write_all(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(CliError::io)?;
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        let tmp = dir.join(format!(".{name}.partial"));
        fs::write(&tmp, contents).map_err(CliError::io)?;
        fs::rename(&tmp, &path).map_err(CliError::io)?;
        written.push(path);
    }
    Ok(written)
}
