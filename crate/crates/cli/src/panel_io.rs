//! Panel CSV: a header row of series names, then one row per time point.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use rfa_core::factor::DataPanel;
use rfa_core::simulation::fmt_f64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("line {line}: expected {expected} cells, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("line {line}, column {column} ('{name}'): '{value}' is not a number")]
    NonNumeric { line: u64, column: usize, name: String, value: String },
    #[error("line {line}, column {column} ('{name}'): '{value}' is not finite")]
    NonFinite { line: u64, column: usize, name: String, value: String },
    #[error("header row has no columns")]
    NoColumns,
    #[error("need at least 2 data rows, found {0}")]
    TooFewRows(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedPanel {
    pub names: Vec<String>,
    pub panel: DataPanel,
}

pub fn read_panel(path: &Path) -> Result<NamedPanel, FormatError> {
    let file = File::open(path).map_err(|source| FormatError::Io { path: path.to_owned(), source })?;
    read_panel_from(file)
}

pub fn read_panel_from<R: Read>(reader: R) -> Result<NamedPanel, FormatError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let csv_err = |e: csv::Error| FormatError::Csv {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    };
    let names: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(FormatError::NoColumns);
    }
    let p = names.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |pos| pos.line());
        if record.len() != p {
            return Err(FormatError::Ragged { line, expected: p, found: record.len() });
        }
        for (j, cell) in record.iter().enumerate() {
            let x: f64 = cell.parse().map_err(|_| FormatError::NonNumeric {
                line,
                column: j + 1,
                name: names[j].clone(),
                value: cell.to_owned(),
            })?;
            if !x.is_finite() {
                return Err(FormatError::NonFinite { line, column: j + 1, name: names[j].clone(), value: cell.to_owned() });
            }
            values.push(x);
        }
        rows += 1;
    }
    if rows < 2 {
        return Err(FormatError::TooFewRows(rows));
    }
    let array = Array2::from_shape_vec((rows, p), values).expect("rows are rectangular");
    let panel = DataPanel::new(array).expect("shape and finiteness checked above");
    Ok(NamedPanel { names, panel })
}

pub fn write_panel<W: Write>(out: W, names: &[String], values: ArrayView2<'_, f64>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(names)?;
    for row in values.rows() {
        w.write_record(row.iter().map(|&x| fmt_f64(x)))?;
    }
    w.flush()?;
    Ok(())
}
