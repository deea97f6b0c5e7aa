//! File formats: covariates in, matrices and allocation lists out.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Allocation, CovariateMatrix};

/// Reads covariates from `.json` (array of rows) or CSV (anything else).
pub fn read_covariates(path: &Path) -> Result<CovariateMatrix> {
    let file = std::fs::File::open(path)?;
    let is_json = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        covariates_from_json(file)
    } else {
        covariates_from_csv(file)
    }
}

pub fn covariates_from_json<R: Read>(reader: R) -> Result<CovariateMatrix> {
    let rows: Vec<Vec<f64>> =
        serde_json::from_reader(reader).map_err(|e| Error::Parse(format!("covariate JSON: {e}")))?;
    if rows.is_empty() {
        return Err(Error::Parse("covariate JSON has no rows".into()));
    }
    CovariateMatrix::from_rows(rows)
}

/// One row per subject. A first row that does not parse as numbers is taken
/// as a header.
pub fn covariates_from_csv<R: Read>(reader: R) -> Result<CovariateMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(Error::Parse(format!("covariate CSV line {}: {e}", line + 1)));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse("covariate CSV has no data rows".into()));
    }
    CovariateMatrix::from_rows(rows)
}

/// Square or rectangular matrix as CSV with a header of column indices.
pub fn write_matrix_csv<W: Write>(writer: W, rows: &[Vec<f64>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let width = rows.first().map_or(0, Vec::len);
    wtr.write_record((0..width).map(|j| j.to_string()))?;
    for row in rows {
        wtr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_matrix_json<W: Write>(writer: W, rows: &[Vec<f64>]) -> Result<()> {
    serde_json::to_writer(writer, rows)?;
    Ok(())
}

/// One allocation per row, one column per subject.
pub fn write_allocations_csv<W: Write>(writer: W, allocations: &[Allocation]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let width = allocations.first().map_or(0, Allocation::len);
    wtr.write_record((0..width).map(|j| format!("w{j}")))?;
    for w in allocations {
        wtr.write_record(w.as_slice().iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Per-draw MSE values with columns `draw_index, mse`.
pub fn write_samples_csv<W: Write>(writer: W, samples: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["draw_index", "mse"])?;
    for (i, v) in samples.iter().enumerate() {
        wtr.write_record([i.to_string(), v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_and_without_header() {
        let a = covariates_from_csv("x1,x2\n1,2\n3,4\n".as_bytes()).unwrap();
        let b = covariates_from_csv("1, 2\n3, 4\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.p(), 2);
        assert!(covariates_from_csv("1,2\nfoo,4\n".as_bytes()).is_err());
        assert!(covariates_from_csv("1\n2\n3\n".as_bytes()).is_err());
        assert!(covariates_from_csv("".as_bytes()).is_err());
    }

    #[test]
    fn json_rows() {
        let x = covariates_from_json("[[0.5],[1.5]]".as_bytes()).unwrap();
        assert_eq!(x.column(0), vec![0.5, 1.5]);
        assert!(covariates_from_json("[[0.5],[1.5,2]]".as_bytes()).is_err());
        assert!(covariates_from_json("{".as_bytes()).is_err());
    }

    #[test]
    fn csv_outputs_round_trip() {
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &[vec![1.0, -0.5], vec![-0.5, 1.0]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0,1\n1,-0.5\n-0.5,1\n");
        let mut buf = Vec::new();
        write_allocations_csv(&mut buf, &[Allocation::new(vec![1, -1]).unwrap()]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "w0,w1\n1,-1\n");
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &[0.25]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "draw_index,mse\n0,0.25\n");
    }
}
