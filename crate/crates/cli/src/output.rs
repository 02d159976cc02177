//! CSV tables, JSON summaries and the run manifest.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` and keeps output byte-identical between runs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Cell::Float(x) => json!(x),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(file_name: &str, header: &[&str]) -> Self {
        Self { file_name: file_name.to_string(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Named scalar results, kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scalars(pub Vec<(String, Cell)>);

impl Scalars {
    pub fn insert(&mut self, name: &str, value: impl Into<Cell>) {
        self.0.push((name.to_string(), value.into()));
    }

    pub fn text(&mut self, name: &str, value: impl Into<String>) {
        self.0.push((name.to_string(), Cell::Text(value.into())));
    }

    pub fn get(&self, name: &str) -> Option<&Cell> {
        self.0.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.0.iter().map(|(k, v)| (k.clone(), v.to_json())).collect::<Map<_, _>>())
    }
}

pub fn config_json(echo: &[(String, String)]) -> Value {
    Value::Object(echo.iter().map(|(k, v)| (k.clone(), json!(v))).collect())
}

pub fn to_json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrittenFile {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Writes `contents` to `dir/name` and records its checksum.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> std::io::Result<WrittenFile> {
    fs::write(dir.join(name), contents)?;
    Ok(WrittenFile { name: name.to_string(), bytes: contents.len(), sha256: sha256_hex(contents.as_bytes()) })
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub duration_seconds: f64,
    pub files: Vec<WrittenFile>,
    pub error: Option<String>,
    pub exit_code: i32,
}

impl Manifest {
    pub fn to_json(&self) -> Value {
        let files: Vec<Value> = self.files.iter().map(|f| json!({ "name": f.name, "bytes": f.bytes, "sha256": f.sha256 })).collect();
        json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": config_json(&self.config),
            "status": if self.error.is_none() { "ok" } else { "error" },
            "error": self.error,
            "exit_code": self.exit_code,
            "duration_seconds": self.duration_seconds,
            "files": files,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_significant_digits() {
        assert_eq!(format_float(12.0), "1.2000000000000000e1");
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.5e-300), "-2.5000000000000000e-300");
        assert_eq!(format_float(f64::NAN), "NaN");
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("x.csv", &["t", "n", "note"]);
        t.push(vec![Cell::Float(0.0), Cell::Int(3), Cell::Empty]);
        t.push(vec![Cell::Float(1.5), Cell::Int(4), Cell::Text("ok".into())]);
        assert_eq!(t.to_csv(), "t,n,note\n0.0000000000000000e0,3,\n1.5000000000000000e0,4,ok\n");
        assert_eq!(t.column("n").unwrap(), vec![&Cell::Int(3), &Cell::Int(4)]);
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
