//! CSV ingestion for raw three-column data.

use std::io::Read;

use crate::error::{Error, Result};

/// A headed numeric table with exactly three columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table3 {
    pub names: [String; 3],
    pub rows: Vec<[f64; 3]>,
}

/// Reads a CSV with a header row and three numeric columns.
///
/// Empty cells, `NA` and `NaN` are rejected; the error carries the 1-based
/// data row.
pub fn read_table3<R: Read>(r: R) -> Result<Table3> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers()?.clone();
    if header.len() != 3 {
        return Err(Error::Parse {
            row: 0,
            message: format!("expected 3 columns, header has {}", header.len()),
        });
    }
    let names = [0, 1, 2].map(|j| header[j].to_string());
    let rows = parse_rows::<3, _>(&mut rdr)?;
    Ok(Table3 { names, rows })
}

pub(crate) fn parse_rows<const N: usize, R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<[f64; N]>> {
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if rec.len() != N {
            return Err(Error::Parse {
                row,
                message: format!("expected {N} fields, found {}", rec.len()),
            });
        }
        let mut out = [0.0; N];
        for (j, field) in rec.iter().enumerate() {
            out[j] = parse_cell(field).map_err(|message| Error::Parse { row, message: format!("column {}: {message}", j + 1) })?;
        }
        rows.push(out);
    }
    Ok(rows)
}

fn parse_cell(s: &str) -> std::result::Result<f64, String> {
    if s.is_empty() || s.eq_ignore_ascii_case("na") {
        return Err("missing value".into());
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("non-finite value '{s}'")),
        Err(_) => Err(format!("not a number: '{s}'")),
    }
}
