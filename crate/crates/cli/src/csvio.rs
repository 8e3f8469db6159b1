//! CSV dialect: comma separator, '.' decimal point, UTF-8, one observation
//! per line. The first row is a header when any of its fields is not a number.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use mcf_core::DataMatrix;
use ndarray::Array2;

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub data: DataMatrix,
}

pub fn default_columns(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("v{i}")).collect()
}

/// Seventeen significant digits: enough for an exact round trip.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_field(s: &str) -> Option<f64> {
    s.parse::<f64>().ok()
}

pub fn parse_csv<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut columns: Option<Vec<String>> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut width = 0;
    let mut rows = 0;
    for (index, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(index as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if columns.is_none() && rows == 0 {
            width = record.len();
            if record.iter().any(|f| parse_field(f).is_none()) {
                columns = Some(record.iter().map(str::to_string).collect());
                continue;
            }
        }
        if record.len() != width {
            return Err(CliError::Parse {
                line,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for field in record.iter() {
            match parse_field(field) {
                Some(v) if v.is_finite() => values.push(v),
                Some(_) => {
                    return Err(CliError::Parse {
                        line,
                        message: format!("non-finite value {field:?}"),
                    })
                }
                None => {
                    return Err(CliError::Parse {
                        line,
                        message: format!("not a number: {field:?}"),
                    })
                }
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Parse {
            line: 1,
            message: "no data rows".into(),
        });
    }
    let matrix = Array2::from_shape_vec((rows, width), values).map_err(|e| CliError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    Ok(Table {
        columns: columns.unwrap_or_else(|| default_columns(width)),
        data: DataMatrix::new(matrix)?,
    })
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(file)
}

pub fn write_rows<W: Write>(out: W, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_matrix(path: &Path, columns: &[String], values: &Array2<f64>) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let rows = values.rows().into_iter().map(|r| r.iter().map(|v| format_value(*v)).collect());
    write_rows(BufWriter::new(file), columns, rows).map_err(|e| CliError::io(path, e))
}
