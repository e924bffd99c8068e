//! CSV emission with a provenance preamble, and the matching reader.
//!
//! Every file starts with `#`-comment lines carrying the schema version,
//! producing command, configuration hash and seed, followed by an ordinary
//! header row. Floats are written in Rust's shortest round-trip form, so
//! reading a file back yields the exact values that were written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e15)`.
pub fn fmt(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Rows of a CSV file before it is written.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self, prov: &Provenance) -> Vec<u8> {
        let mut out = format!(
            "# schema_version={SCHEMA_VERSION}\n# command={}\n# config_hash={}\n# seed={}\n",
            prov.command, prov.config_hash, prov.seed
        )
        .into_bytes();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        out.extend(w.into_inner().expect("in-memory flush"));
        out
    }

    pub fn write(&self, path: &Path, prov: &Provenance) -> Result<(), HarnessError> {
        fs::write(path, self.to_bytes(prov)).map_err(|e| HarnessError::io(path, e))
    }
}

/// Parsed CSV: preamble key/values, header and raw cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCsv {
    pub meta: BTreeMap<String, String>,
    pub table: Table,
}

impl ParsedCsv {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.table.header.iter().position(|h| h == name)
    }

    /// A numeric column; unparsable cells are an error.
    pub fn floats(&self, name: &str) -> Result<Vec<f64>, HarnessError> {
        let c = self.column(name).ok_or_else(|| HarnessError::Io(format!("missing column {name}")))?;
        self.table
            .rows
            .iter()
            .map(|r| r[c].parse::<f64>().map_err(|e| HarnessError::Io(format!("column {name}: {e}"))))
            .collect()
    }
}

pub fn read_csv(path: &Path) -> Result<ParsedCsv, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut meta = BTreeMap::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') {
            meta.insert(k.to_string(), v.to_string());
        }
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| HarnessError::io(path, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(|e| HarnessError::io(path, e))?.iter().map(String::from).collect());
    }
    Ok(ParsedCsv { meta, table: Table { header, rows } })
}

pub fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub fn path_in(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
