//! Numeric CSV datasets: one header row, comma separated, `.` decimals.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub response_name: String,
    pub predictor_names: Vec<String>,
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.predictor_names.len()
    }

    /// The dataset restricted to predictor columns `keep`, in that order.
    pub fn select(&self, keep: &[usize]) -> Dataset {
        Dataset {
            response_name: self.response_name.clone(),
            predictor_names: keep.iter().map(|&j| self.predictor_names[j].clone()).collect(),
            x: self.x.select_cols(keep),
            y: self.y.clone(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.predictor_names.iter().position(|c| c == name)
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        csv::ErrorKind::Utf8 { .. } => Error::Parse {
            line,
            message: "invalid UTF-8".into(),
        },
        _ => Error::Csv(e),
    }
}

/// Parses a dataset. `response` names the response column; the first column
/// is used when it is `None`.
pub fn read_dataset<R: Read>(input: R, response: Option<&str>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers: Vec<String> = reader.headers().map_err(csv_error)?.iter().map(|h| h.trim().to_string()).collect();
    if headers.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "need a response column and at least one predictor".into(),
        });
    }
    for (i, h) in headers.iter().enumerate() {
        if h.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: format!("column {} has an empty name", i + 1),
            });
        }
        if headers[..i].contains(h) {
            return Err(Error::Parse {
                line: 1,
                message: format!("duplicate column name `{h}`"),
            });
        }
    }
    let ycol = match response {
        None => 0,
        Some(name) => headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("no column named `{name}`"),
        })?,
    };
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Cell {
                line,
                column: headers[j].clone(),
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::Cell {
                    line,
                    column: headers[j].clone(),
                    value: field.to_string(),
                });
            }
            columns[j].push(v);
        }
    }
    let n = columns[0].len();
    if n == 0 {
        return Err(Error::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    let y = columns.remove(ycol);
    let response_name = headers[ycol].clone();
    let predictor_names: Vec<String> =
        headers.iter().enumerate().filter(|&(j, _)| j != ycol).map(|(_, h)| h.clone()).collect();
    let x = Matrix::from_columns(n, &columns)?;
    Ok(Dataset {
        response_name,
        predictor_names,
        x,
        y,
    })
}

pub fn load_dataset(path: &Path, response: Option<&str>) -> Result<Dataset> {
    read_dataset(std::fs::File::open(path)?, response)
}

/// Writes the response first, then the predictors, with shortest
/// round-trip number formatting.
pub fn write_dataset<W: Write>(out: W, data: &Dataset) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec![data.response_name.as_str()];
    header.extend(data.predictor_names.iter().map(String::as_str));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..data.n() {
        row.clear();
        row.push(format_number(data.y[i]));
        for j in 0..data.p() {
            row.push(format_number(data.x[(i, j)]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dataset(std::io::BufWriter::new(file), data)
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}
