//! Tabular results and their CSV/JSON files.
//!
//! CSV headers read `name [unit]`. Complex quantities occupy two columns,
//! `name_re` and `name_im`. Missing values are empty cells in CSV and
//! `null` in JSON.

use crate::config::{Format, Grids, RunConfig};
use crate::error::CliError;
use num_complex::Complex64;
use sawtooth_core::Warning;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns
                .iter()
                .map(|(n, u)| Column {
                    name: n.to_string(),
                    unit: u.to_string(),
                })
                .collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_column(mut self, name: &str, unit: &str) -> Self {
        self.columns.push(Column {
            name: name.to_string(),
            unit: unit.to_string(),
        });
        self
    }

    /// Adds `name_re` and `name_im` columns.
    pub fn with_complex(mut self, name: &str, unit: &str) -> Self {
        for part in ["re", "im"] {
            self.columns.push(Column {
                name: format!("{name}_{part}"),
                unit: unit.to_string(),
            });
        }
        self
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn push_values(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| Some(*v)).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn header(&self) -> Vec<String> {
        self.columns
            .iter()
            .map(|c| {
                if c.unit.is_empty() {
                    c.name.clone()
                } else {
                    format!("{} [{}]", c.name, c.unit)
                }
            })
            .collect()
    }
}

pub fn complex_cells(z: Complex64) -> [Option<f64>; 2] {
    [Some(z.re), Some(z.im)]
}

/// Twelve significant digits.
pub fn format_value(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(0.0) => format!("{:.11e}", 0.0),
        Some(x) => format!("{x:.11e}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    pub config_hash: String,
    pub library_version: String,
    pub grids: Grids,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub metadata: Metadata,
    pub tables: Vec<Table>,
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.canonical_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Dataset {
    pub fn new(cfg: &RunConfig, tables: Vec<Table>, warnings: Vec<Warning>) -> Self {
        Dataset {
            metadata: Metadata {
                command: cfg.command.name().to_string(),
                config_hash: config_hash(cfg),
                library_version: env!("CARGO_PKG_VERSION").to_string(),
                grids: cfg.grids.clone(),
                warnings,
            },
            tables,
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn table_csv(table: &Table) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(table.header())?;
        for row in &table.rows {
            w.write_record(row.iter().map(|v| format_value(*v)))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }

    /// Files written for `out`: JSON is one document, CSV is one file per
    /// table (`<stem>_<table>.csv` when there is more than one).
    pub fn file_contents(&self, out: &Path, format: Format) -> Result<Vec<(PathBuf, Vec<u8>)>, CliError> {
        match format {
            Format::Json => Ok(vec![(out.to_path_buf(), self.to_json()?.into_bytes())]),
            Format::Csv => {
                if self.tables.len() == 1 {
                    return Ok(vec![(out.to_path_buf(), Self::table_csv(&self.tables[0])?)]);
                }
                let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
                let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
                self.tables
                    .iter()
                    .map(|t| Ok((out.with_file_name(format!("{stem}_{}.{ext}", t.name)), Self::table_csv(t)?)))
                    .collect()
            }
        }
    }

    pub fn export(&self, out: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
        let files = self.file_contents(out, format)?;
        let mut written = Vec::with_capacity(files.len());
        for (path, bytes) in files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut f = std::fs::File::create(&path)?;
            f.write_all(&bytes)?;
            written.push(path);
        }
        Ok(written)
    }

    /// Reads a CSV table back; values carry the printed precision.
    pub fn read_csv_table(name: &str, path: &Path) -> Result<Table, CliError> {
        let mut r = csv::Reader::from_path(path)?;
        let columns = r
            .headers()?
            .iter()
            .map(|h| match h.rsplit_once(" [") {
                Some((n, u)) => Column {
                    name: n.to_string(),
                    unit: u.trim_end_matches(']').to_string(),
                },
                None => Column {
                    name: h.to_string(),
                    unit: String::new(),
                },
            })
            .collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    if s.is_empty() {
                        Ok(None)
                    } else {
                        s.parse::<f64>()
                            .map(Some)
                            .map_err(|e| CliError::Config(format!("bad number `{s}`: {e}")))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Table {
            name: name.to_string(),
            columns,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_value(Some(std::f64::consts::PI)), "3.14159265359e0");
        assert_eq!(format_value(Some(-0.0)), "0.00000000000e0");
        assert_eq!(format_value(None), "");
    }

    #[test]
    fn header_carries_units() {
        let t = Table::new("x", &[("k", "rad"), ("n", "")]).with_complex("c", "1");
        assert_eq!(t.header(), vec!["k [rad]", "n", "c_re [1]", "c_im [1]"]);
    }

    #[test]
    fn csv_reads_back_at_printed_precision() {
        let mut t = Table::new("x", &[("a", "J_AA"), ("b", "")]);
        t.push(vec![Some(1.0 / 3.0), None]);
        t.push_values(&[-2.5e-7, 4.0]);
        let dir = std::env::temp_dir().join(format!("sawtooth-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("x.csv");
        std::fs::write(&path, Dataset::table_csv(&t).unwrap()).unwrap();
        let back = Dataset::read_csv_table("x", &path).unwrap();
        std::fs::remove_dir_all(&dir).unwrap();
        assert_eq!(back.columns, t.columns);
        assert_eq!(back.rows[0][1], None);
        assert!((back.rows[0][0].unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(back.rows[1], vec![Some(-2.5e-7), Some(4.0)]);
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new("x", &[("a", "J_AA")]);
        let bytes = Dataset::table_csv(&t).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "a [J_AA]\n");
    }
}
