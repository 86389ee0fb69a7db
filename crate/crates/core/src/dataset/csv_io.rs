use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Names of the source and outcome columns; every other column is a feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub source_column: String,
    pub outcome_column: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            source_column: "source".into(),
            outcome_column: "outcome".into(),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        })
}

/// Parses a dataset from CSV text. Row numbers in errors count data rows
/// from 1, excluding the header.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Empty("csv file has no header".into()));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let source_col = find(&schema.source_column)?;
    let outcome_col = find(&schema.outcome_column)?;
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != source_col && c != outcome_col)
        .collect();
    let feature_names: Vec<String> = feature_cols
        .iter()
        .map(|&c| headers[c].to_string())
        .collect();

    let mut data = Vec::new();
    let mut outcome = Vec::new();
    let mut ids = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        ids.push(record[source_col].to_string());
        outcome.push(parse_cell(
            &record[outcome_col],
            row,
            &schema.outcome_column,
        )?);
        for &c in &feature_cols {
            data.push(parse_cell(&record[c], row, &headers[c])?);
        }
    }
    if ids.is_empty() {
        return Err(Error::Empty("csv file has no data rows".into()));
    }
    let features = Matrix::from_vec(ids.len(), feature_cols.len(), data)?;
    Dataset::new(features, outcome, &ids, feature_names)
}

/// Writes `source, <features...>, outcome` with shortest round-trip float
/// formatting, so [`read_csv`] reproduces the dataset exactly.
pub fn write_csv_to<W: Write>(ds: &Dataset, writer: W, schema: &CsvSchema) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = Vec::with_capacity(ds.n_features() + 2);
    header.push(schema.source_column.clone());
    header.extend(ds.feature_names().iter().cloned());
    header.push(schema.outcome_column.clone());
    w.write_record(&header)?;
    let mut rec = Vec::with_capacity(header.len());
    for i in 0..ds.n_rows() {
        rec.clear();
        rec.push(ds.source_id_of_row(i).to_string());
        rec.extend(ds.features().row(i).iter().map(|v| v.to_string()));
        rec.push(ds.outcome()[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>, schema: &CsvSchema) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(ds, std::io::BufWriter::new(file), schema)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows_two_sources() {
        let text = "x1,source,outcome\n0.5,A,1\n1.5,A,0\n-2,B,1\n";
        let ds = read_csv(text.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(ds.n_rows(), 3);
        let idx = ds.source_index();
        assert_eq!(idx["A"], &[0, 1]);
        assert_eq!(idx["B"], &[2]);
        assert_eq!(ds.features().row(2), &[-2.0]);
    }

    #[test]
    fn parse_error_names_row_and_column() {
        let text = "x,source,outcome\n1,A,0\n1,A,0\n1,A,0\n1,A,0\n1,A,x\n";
        let err = read_csv(text.as_bytes(), &CsvSchema::default()).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 5);
                assert_eq!(column, "outcome");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn missing_column_and_empty_file() {
        let err = read_csv("x,outcome\n1,0\n".as_bytes(), &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "source"));
        assert!(read_csv("".as_bytes(), &CsvSchema::default()).is_err());
        assert!(matches!(
            read_csv("x,source,outcome\n".as_bytes(), &CsvSchema::default()),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn missing_value_is_hard_error() {
        let text = "x,source,outcome\n,A,0\n";
        assert!(matches!(
            read_csv(text.as_bytes(), &CsvSchema::default()),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn missing_file_reports_path() {
        let err = load_csv("/nonexistent/data.csv", &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn write_then_read_is_identity() {
        let text = "a,b,grp,y\n0.1,1e-300,g1,0.3333333333333333\n-7,2.5,g0,1\n";
        let schema = CsvSchema {
            source_column: "grp".into(),
            outcome_column: "y".into(),
        };
        let ds = read_csv(text.as_bytes(), &schema).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&ds, &mut buf, &schema).unwrap();
        let back = read_csv(buf.as_slice(), &schema).unwrap();
        assert_eq!(ds, back);
    }
}
