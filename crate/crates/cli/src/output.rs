//! Result tables and their CSV / JSON-lines writers.
//!
//! Both formats start with provenance: `#` comment lines in CSV, a leading
//! `{"provenance": …}` object in JSON lines. Floats are written with 17
//! significant digits.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Format};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json_text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_finite() => format_float(*v),
            Cell::Float(_) => "null".into(),
            Cell::Text(s) => Value::String(s.clone()).to_string(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
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

/// `d.dddddddddddddddde±x`; 17 significant digits round-trip any f64.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub command: String,
    pub seed: u64,
    pub config: Option<ExperimentConfig>,
    /// Extra `key: value` lines, e.g. the suite name.
    pub extra: Vec<(String, String)>,
}

impl Provenance {
    pub fn for_config(command: &str, config: &ExperimentConfig) -> Self {
        Provenance {
            command: command.into(),
            seed: config.mc.master_seed,
            config: Some(config.canonical()),
            extra: Vec::new(),
        }
    }

    pub fn config_json(&self) -> String {
        self.config
            .as_ref()
            .map_or_else(|| "null".into(), |c| c.to_compact_json())
    }

    pub fn config_hash(&self) -> String {
        Sha256::digest(self.config_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn lines(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("mpp-lab".to_string(), VERSION.to_string()),
            ("command".to_string(), self.command.clone()),
            ("seed".to_string(), self.seed.to_string()),
            ("config_sha256".to_string(), self.config_hash()),
            ("config".to_string(), self.config_json()),
        ];
        out.extend(self.extra.iter().cloned());
        out
    }
}

fn write_csv<W: Write>(mut w: W, prov: &Provenance, table: &Table) -> io::Result<()> {
    for (k, v) in prov.lines() {
        writeln!(w, "# {k}: {v}")?;
    }
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(&mut w);
    csv.write_record(&table.columns)?;
    for row in &table.rows {
        csv.write_record(row.iter().map(Cell::csv_text))?;
    }
    csv.flush()?;
    drop(csv);
    w.flush()
}

fn write_json_lines<W: Write>(mut w: W, prov: &Provenance, table: &Table) -> io::Result<()> {
    let config: Value = serde_json::from_str(&prov.config_json()).expect("config json");
    let mut head = Map::new();
    head.insert("version".into(), json!(VERSION));
    head.insert("command".into(), json!(prov.command));
    head.insert("seed".into(), json!(prov.seed));
    head.insert("config_sha256".into(), json!(prov.config_hash()));
    head.insert("config".into(), config);
    for (k, v) in &prov.extra {
        head.insert(k.clone(), json!(v));
    }
    writeln!(w, "{}", json!({ "provenance": head }))?;
    for row in &table.rows {
        let fields: Vec<String> = table
            .columns
            .iter()
            .zip(row)
            .map(|(c, cell)| format!("{}:{}", Value::String(c.clone()), cell.json_text()))
            .collect();
        writeln!(w, "{{{}}}", fields.join(","))?;
    }
    w.flush()
}

pub fn write_table<W: Write>(
    w: W,
    format: Format,
    prov: &Provenance,
    table: &Table,
) -> io::Result<()> {
    match format {
        Format::Csv => write_csv(w, prov, table),
        Format::Json => write_json_lines(w, prov, table),
    }
}

/// Write to `path`, or to stdout when `path` is `None`.
pub fn emit(
    path: Option<&Path>,
    format: Format,
    prov: &Provenance,
    table: &Table,
) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let io_err = |source| CliError::Io {
                path: p.to_path_buf(),
                source,
            };
            let file = File::create(p).map_err(io_err)?;
            write_table(BufWriter::new(file), format, prov, table).map_err(io_err)
        }
        None => {
            let stdout = io::stdout();
            write_table(stdout.lock(), format, prov, table).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

/// Parse the `# config: …` line of a CSV header back into a config.
pub fn config_from_csv_header(text: &str) -> Option<Result<ExperimentConfig, CliError>> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# config: "))
        .filter(|j| *j != "null")
        .map(ExperimentConfig::from_json)
}
