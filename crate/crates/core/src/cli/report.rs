//! Result tables and the JSON run manifest.
//!
//! Every table is written with fixed formatting so that reading a file back
//! and writing it again reproduces the same bytes.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// A header plus string rows, exactly as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn get(&self, row: usize, name: &str) -> Option<&str> {
        self.column(name).map(|j| self.rows[row][j].as_str())
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Table { header, rows })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }
}

/// Fraction with six decimals.
pub fn fmt_fraction(v: f64) -> String {
    format!("{v:.6}")
}

/// Percentage with one decimal, as in the published tables.
pub fn fmt_percent(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

pub fn fmt_sci(v: f64) -> String {
    format!("{v:.6e}")
}

pub fn fmt_opt(v: Option<f64>, f: fn(f64) -> String) -> String {
    v.map(f).unwrap_or_default()
}

pub fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse {
        line: 0,
        message: format!("cannot read {what} from `{s}`"),
    })
}

/// Columns shared by the simulation and ROC tables.
pub const CELL_COLUMNS: [&str; 11] = [
    "experiment",
    "model",
    "n",
    "p",
    "k",
    "rho",
    "coef",
    "heteroscedastic",
    "transform",
    "transform_param",
    "penalty",
];

pub const RESULT_COLUMNS: [&str; 9] = [
    "criterion",
    "replicates",
    "mean_tpr",
    "mean_fpr",
    "tpr_pct",
    "fpr_pct",
    "mean_cmse",
    "mean_df",
    "status",
];

pub const ROC_COLUMNS: [&str; 7] = [
    "lambda_index",
    "lambda_ratio",
    "mean_fpr",
    "mean_tpr",
    "mean_df",
    "replicates",
    "status",
];

pub fn header_with(extra: &[&'static str]) -> Vec<&'static str> {
    CELL_COLUMNS.iter().chain(extra).copied().collect()
}

/// Path of the manifest written next to `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub prodreg: &'static str,
    pub format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Versions {
            prodreg: env!("CARGO_PKG_VERSION"),
            format: 1,
        }
    }
}

/// Run-dependent facts kept apart from the reproducible part.
#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_time_seconds: f64,
    pub jobs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<C: Serialize, S: Serialize> {
    pub command: &'static str,
    pub seed: u64,
    pub versions: Versions,
    pub config: C,
    pub outputs: Vec<String>,
    pub errors: Vec<String>,
    pub summary: S,
    pub timing: Timing,
}

impl<C: Serialize, S: Serialize> Manifest<C, S> {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// The manifest with its `timing` block removed, for comparing two runs.
pub fn reproducible_manifest(text: &str) -> Result<serde_json::Value> {
    let mut v: serde_json::Value = serde_json::from_str(text)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timing");
    }
    Ok(v)
}
