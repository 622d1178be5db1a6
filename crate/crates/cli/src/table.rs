//! Tab-separated result tables.
//!
//! ```text
//! # format: dicke-slice
//! # format_version: 1
//! # config_hash: 3f9c0a1b2d4e5f60
//! # config: {...}
//! # columns: index	h	...	converged	status	error
//! 0	0.2	...	1	converged	-
//! ```

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::{CliError, Result};

pub const TABLE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub kind: String,
    pub config_hash: String,
    pub config_json: String,
    /// Extra `key: value` header lines.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, config_hash: &str, config_json: &str, columns: Vec<String>) -> Self {
        Self {
            kind: kind.to_string(),
            config_hash: config_hash.to_string(),
            config_json: config_json.to_string(),
            meta: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn header(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# format: dicke-{}", self.kind).ok();
        writeln!(s, "# format_version: {TABLE_FORMAT_VERSION}").ok();
        writeln!(s, "# config_hash: {}", self.config_hash).ok();
        writeln!(s, "# config: {}", self.config_json).ok();
        for (k, v) in &self.meta {
            writeln!(s, "# {k}: {v}").ok();
        }
        writeln!(s, "# columns: {}", self.columns.join("\t")).ok();
        s
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Table(format!("no column {name:?}")))
    }

    /// A numeric column; unparsable cells (failed points) become NaN.
    pub fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[k].parse().unwrap_or(f64::NAN)).collect())
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn text(&self, name: &str) -> Result<Vec<&str>> {
        let k = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    /// Parses a table. A final line without a newline is an interrupted
    /// write and is dropped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut hash = None;
        let mut config = String::new();
        let mut columns: Option<Vec<String>> = None;
        let mut meta = Vec::new();
        let mut rows = Vec::new();
        let complete = match text.rfind('\n') {
            Some(i) => &text[..=i],
            None => "",
        };
        for line in complete.lines() {
            if let Some(h) = line.strip_prefix("# ") {
                let (key, value) = h.split_once(": ").unwrap_or((h, ""));
                match key {
                    "format" => kind = value.strip_prefix("dicke-").map(str::to_string),
                    "format_version" => {
                        if value.parse::<u32>().ok() != Some(TABLE_FORMAT_VERSION) {
                            return Err(CliError::Table(format!("unsupported format version {value:?}")));
                        }
                    }
                    "config_hash" => hash = Some(value.to_string()),
                    "config" => config = value.to_string(),
                    "columns" => columns = Some(value.split('\t').map(str::to_string).collect()),
                    _ => meta.push((key.to_string(), value.to_string())),
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols = columns.as_ref().ok_or_else(|| CliError::Table("row before column header".into()))?;
            let row: Vec<String> = line.split('\t').map(str::to_string).collect();
            if row.len() != cols.len() {
                return Err(CliError::Table(format!("row has {} cells, expected {}", row.len(), cols.len())));
            }
            rows.push(row);
        }
        Ok(Self {
            kind: kind.ok_or_else(|| CliError::Table("missing format line".into()))?,
            config_hash: hash.ok_or_else(|| CliError::Table("missing config_hash".into()))?,
            config_json: config,
            meta,
            columns: columns.ok_or_else(|| CliError::Table("missing columns".into()))?,
            rows,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.header().as_bytes())?;
        for r in &self.rows {
            writeln!(f, "{}", r.join("\t"))?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Shortest round-trip float text; NaN for missing values.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), num)
}

/// Free text made safe for one cell.
pub fn cell(s: &str) -> String {
    let t: String = s.chars().map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c }).collect();
    if t.is_empty() {
        "-".into()
    } else {
        t
    }
}
