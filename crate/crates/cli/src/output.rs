//! Tables and their CSV/JSON serialization.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Significant digits for floats in CSV output.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// `v` rounded to `SIGNIFICANT_DIGITS` significant digits, printed in the
/// shortest form that reads back as the rounded value.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().expect("valid float");
    let mag = rounded.abs();
    if (1e-4..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv))?;
        }
        w.flush()?;
        Ok(())
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().cloned().zip(row.iter().map(Cell::to_json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Output of one command: the resolved configuration and its tables, the
/// first of which is the primary one.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn config_line(&self) -> String {
        format!("# config: {}\n", serde_json::to_string(&self.config).expect("serializable config"))
    }

    fn csv_block(&self, table: &Table) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        table.write_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
        Ok(buf)
    }

    fn json_document(&self) -> Value {
        let tables: Map<String, Value> = self.tables.iter().map(|t| (t.name.clone(), t.to_json())).collect();
        serde_json::json!({
            "command": self.command,
            "config": self.config,
            "tables": tables,
        })
    }

    /// Everything on one stream: the primary table, then each further table
    /// after a `# table: <name>` line.
    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => {
                let mut text = serde_json::to_string_pretty(&self.json_document()).expect("serializable");
                text.push('\n');
                Ok(text.into_bytes())
            }
            Format::Csv => {
                let mut out = self.config_line().into_bytes();
                for (i, t) in self.tables.iter().enumerate() {
                    if i > 0 {
                        out.extend(format!("# table: {}\n", t.name).into_bytes());
                    }
                    out.extend(self.csv_block(t)?);
                }
                Ok(out)
            }
        }
    }

    /// Writes to `path`. CSV puts each further table in `<stem>.<name>.csv`
    /// next to it. Returns the files written.
    pub fn write_to(&self, path: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
        let write = |p: &Path, bytes: &[u8]| fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())));
        match format {
            Format::Json => {
                write(path, &self.render(Format::Json)?)?;
                Ok(vec![path.to_path_buf()])
            }
            Format::Csv => {
                let mut written = Vec::new();
                for (i, t) in self.tables.iter().enumerate() {
                    let target = if i == 0 { path.to_path_buf() } else { sibling(path, &t.name) };
                    let mut bytes = self.config_line().into_bytes();
                    bytes.extend(self.csv_block(t)?);
                    write(&target, &bytes)?;
                    written.push(target);
                }
                Ok(written)
            }
        }
    }
}

/// `<dir>/<stem>.<table>.csv` for the primary file `<dir>/<stem>.csv`.
pub fn sibling(primary: &Path, table: &str) -> PathBuf {
    let stem = primary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    primary.with_file_name(format!("{stem}.{table}.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(1.04), "1.04");
        assert_eq!(format_float(0.1 + 0.2), "0.3");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_float(2.0), "2");
        assert_eq!(format_float(-9.6e-5), "-9.6e-5");
        assert_eq!(format_float(1e20), "1e20");
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!(format_float(0.0), "0");
        let v = std::f64::consts::PI * 1e-7;
        let back: f64 = format_float(v).parse().unwrap();
        assert!((back - v).abs() <= 5e-12 * v);
    }

    #[test]
    fn csv_rendering() {
        let mut t = Table::new("main", &["a", "b", "c"]);
        t.push(vec![Cell::from(1.5), Cell::from("x,y"), Cell::from(None::<f64>)]);
        let mut extra = Table::new("extra", &["k"]);
        extra.push(vec![Cell::from(3usize)]);
        let report = Report {
            command: "test".into(),
            config: serde_json::json!({"d": [2]}),
            tables: vec![t, extra],
        };
        let text = String::from_utf8(report.render(Format::Csv).unwrap()).unwrap();
        assert_eq!(text, "# config: {\"d\":[2]}\na,b,c\n1.5,\"x,y\",\n# table: extra\nk\n3\n");
        let json: Value = serde_json::from_slice(&report.render(Format::Json).unwrap()).unwrap();
        assert_eq!(json["tables"]["main"][0]["a"], 1.5);
        assert_eq!(json["tables"]["main"][0]["c"], Value::Null);
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("out/run.csv"), "summary"), PathBuf::from("out/run.summary.csv"));
    }
}
