//! CSV ingestion and export. One file holds the design (one row per sample),
//! another holds the response (a single column). Values are written with the
//! shortest representation that round-trips exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::design::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// First row holds column names.
    pub header: bool,
}

/// A parsed numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Option<Vec<String>>,
    pub rows: usize,
    pub cols: usize,
    /// Row-major values.
    pub values: Vec<f64>,
}

impl Table {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.values)
    }
}

pub fn read_table(path: &Path, opts: CsvOptions) -> Result<Table> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let names = if opts.header {
        Some(reader.headers().map_err(csv_err)?.iter().map(str::to_owned).collect::<Vec<_>>())
    } else {
        None
    };
    let mut expected = names.as_ref().map(Vec::len);
    let mut values = Vec::new();
    let mut rows = 0;
    // Row numbers in errors are 1-based file lines.
    let offset = 1 + usize::from(opts.header);
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = i + offset;
        let exp = *expected.get_or_insert(record.len());
        if record.len() != exp {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row,
                expected: exp,
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                path: path.to_path_buf(),
                row,
                col: col + 1,
                value: cell.to_owned(),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    Ok(Table {
        names,
        rows,
        cols: expected.unwrap_or(0),
        values,
    })
}

/// Reads a single-column vector (e.g. a response or coefficient file).
pub fn read_vector(path: &Path, opts: CsvOptions) -> Result<DVector<f64>> {
    let table = read_table(path, opts)?;
    if table.cols != 1 && table.rows > 0 {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: format!("expected a single column, found {}", table.cols),
        });
    }
    Ok(DVector::from_vec(table.values))
}

pub fn load_csv(x_path: &Path, y_path: &Path, opts: CsvOptions) -> Result<Dataset> {
    let table = read_table(x_path, opts)?;
    let y = read_vector(y_path, opts)?;
    if table.rows != y.len() {
        return Err(Error::LengthMismatch {
            x_rows: table.rows,
            y_len: y.len(),
        });
    }
    let ds = Dataset::new(table.to_matrix(), y)?;
    match table.names {
        Some(names) => ds.with_names(names),
        None => Ok(ds),
    }
}

pub fn write_matrix(path: &Path, x: &DMatrix<f64>, names: Option<&[String]>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    if let Some(names) = names {
        writeln!(out, "{}", names.join(","))?;
    }
    for i in 0..x.nrows() {
        let line: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_vector(path: &Path, v: &DVector<f64>, header: Option<&str>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    if let Some(h) = header {
        writeln!(out, "{h}")?;
    }
    for x in v.iter() {
        writeln!(out, "{x}")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `X` and `y` to two files; a header row is written when the dataset
/// carries column names.
pub fn save_csv(ds: &Dataset, x_path: &Path, y_path: &Path) -> Result<()> {
    write_matrix(x_path, ds.x(), ds.names())?;
    write_vector(y_path, ds.y(), ds.names().map(|_| "y"))
}

/// Writes named columns of equal length as CSV.
pub fn write_columns(path: &Path, headers: &[&str], columns: &[Vec<f64>]) -> Result<()> {
    assert_eq!(headers.len(), columns.len());
    let len = columns.first().map_or(0, Vec::len);
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", headers.join(","))?;
    for i in 0..len {
        let line: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}
