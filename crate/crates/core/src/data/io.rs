//! CSV interchange for summary datasets.
//!
//! Header: `variant_id,beta_x_1,...,beta_x_K,se_x_1,...,se_x_K,beta_y,se_y`.
//! Row numbers in error messages are file line numbers (the header is row 1).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::SummaryDataset;
use crate::error::{MvmrError, Result};
use crate::scalar::Real;

/// Expected header columns for `k` risk factors.
pub fn summary_header(k: usize) -> Vec<String> {
    let mut h = vec!["variant_id".to_string()];
    h.extend((1..=k).map(|i| format!("beta_x_{i}")));
    h.extend((1..=k).map(|i| format!("se_x_{i}")));
    h.push("beta_y".into());
    h.push("se_y".into());
    h
}

/// Reads and validates a summary CSV file.
pub fn load_summary_csv<T: Real>(path: impl AsRef<Path>, k: usize) -> Result<SummaryDataset<T>> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| MvmrError::Io(format!("cannot open {}: {e}", path.display())))?;
    read_summary_csv(file, k)
}

pub fn read_summary_csv<T: Real, R: Read>(reader: R, k: usize) -> Result<SummaryDataset<T>> {
    if k == 0 {
        return Err(MvmrError::Argument("risk-factor count must be at least 1".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let expected = summary_header(k);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != expected {
        return Err(MvmrError::Parse {
            row: 1,
            column: "header".into(),
            message: format!("expected `{}`, found `{}`", expected.join(","), header.join(",")),
        });
    }

    let mut ids = Vec::new();
    let mut bx: Vec<T> = Vec::new();
    let mut sx: Vec<T> = Vec::new();
    let mut by = Vec::new();
    let mut sy = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| MvmrError::Parse {
            row,
            column: "-".into(),
            message: e.to_string(),
        })?;
        if rec.len() != expected.len() {
            return Err(MvmrError::Parse {
                row,
                column: "-".into(),
                message: format!("expected {} fields, found {}", expected.len(), rec.len()),
            });
        }
        let id = rec.get(0).unwrap_or("");
        if id.is_empty() {
            return Err(MvmrError::Parse {
                row,
                column: "variant_id".into(),
                message: "missing value".into(),
            });
        }
        ids.push(id.to_string());
        let num = |col: usize| -> Result<T> {
            let cell = rec.get(col).unwrap_or("");
            let name = &expected[col];
            if cell.is_empty() {
                return Err(MvmrError::Parse {
                    row,
                    column: name.clone(),
                    message: "missing value".into(),
                });
            }
            let v: T = cell.parse().map_err(|_| MvmrError::Parse {
                row,
                column: name.clone(),
                message: format!("not a number: `{cell}`"),
            })?;
            if !v.is_finite() {
                return Err(MvmrError::Parse {
                    row,
                    column: name.clone(),
                    message: format!("non-finite value `{cell}`"),
                });
            }
            Ok(v)
        };
        for c in 0..k {
            bx.push(num(1 + c)?);
        }
        for c in 0..k {
            let v = num(1 + k + c)?;
            if v < T::zero() {
                return Err(MvmrError::Parse {
                    row,
                    column: expected[1 + k + c].clone(),
                    message: format!("negative risk-factor standard error, row {row}"),
                });
            }
            sx.push(v);
        }
        by.push(num(1 + 2 * k)?);
        let s = num(2 + 2 * k)?;
        if !(s > T::zero()) {
            return Err(MvmrError::Parse {
                row,
                column: "se_y".into(),
                message: format!("non-positive outcome standard error, row {row}"),
            });
        }
        sy.push(s);
    }
    let p = ids.len();
    let beta_x = Array2::from_shape_vec((p, k), bx).expect("row-major shape");
    let se_x = Array2::from_shape_vec((p, k), sx).expect("row-major shape");
    SummaryDataset::new(ids, beta_x, se_x, Array1::from(by), Array1::from(sy))
}

/// Writes a dataset in the canonical CSV schema. Values use the shortest
/// decimal form that parses back to the identical floating-point value.
pub fn write_summary_csv_to<T: Real, W: Write>(ds: &SummaryDataset<T>, writer: W) -> Result<()> {
    let k = ds.n_risk_factors();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(summary_header(k))?;
    for j in 0..ds.n_variants() {
        let mut rec = Vec::with_capacity(2 * k + 3);
        rec.push(ds.variant_ids()[j].clone());
        rec.extend((0..k).map(|c| ds.beta_x()[[j, c]].to_string()));
        rec.extend((0..k).map(|c| ds.se_x()[[j, c]].to_string()));
        rec.push(ds.beta_y()[j].to_string());
        rec.push(ds.se_y()[j].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<T: Real>(ds: &SummaryDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_summary_csv_to(ds, file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_minimal_file() {
        let text = "variant_id,beta_x_1,se_x_1,beta_y,se_y\n\
                    a,1,0,2,1\nb,1,0,2,1\nc,1,0,2,1\n";
        let ds: SummaryDataset<f64> = read_summary_csv(text.as_bytes(), 1).unwrap();
        assert_eq!(ds.n_variants(), 3);
        assert_eq!(ds.n_risk_factors(), 1);
        assert_eq!(ds.beta_y().to_vec(), vec![2.0, 2.0, 2.0]);
        assert_eq!(ds.variant_ids(), &["a", "b", "c"]);
    }

    #[test]
    fn zero_outcome_se_names_row() {
        let text = "variant_id,beta_x_1,se_x_1,beta_y,se_y\n\
                    a,1,0,2,0\nb,1,0,2,1\nc,2,0,2,1\n";
        let err = read_summary_csv::<f64, _>(text.as_bytes(), 1).unwrap_err();
        assert!(err.to_string().contains("non-positive outcome standard error, row 2"), "{err}");
    }

    #[test]
    fn missing_and_nan_cells_name_row_and_column() {
        let text = "variant_id,beta_x_1,se_x_1,beta_y,se_y\na,1,0,,1\n";
        let err = read_summary_csv::<f64, _>(text.as_bytes(), 1).unwrap_err();
        assert_eq!(
            err,
            MvmrError::Parse { row: 2, column: "beta_y".into(), message: "missing value".into() }
        );
        let text = "variant_id,beta_x_1,se_x_1,beta_y,se_y\na,1,0,1,1\nb,NaN,0,1,1\n";
        let err = read_summary_csv::<f64, _>(text.as_bytes(), 1).unwrap_err();
        assert!(matches!(err, MvmrError::Parse { row: 3, ref column, .. } if column == "beta_x_1"));
    }

    #[test]
    fn wrong_header_rejected() {
        let text = "id,beta_x_1,se_x_1,beta_y,se_y\na,1,0,1,1\n";
        let err = read_summary_csv::<f64, _>(text.as_bytes(), 1).unwrap_err();
        assert!(matches!(err, MvmrError::Parse { row: 1, .. }));
    }

    #[test]
    fn too_few_variants_is_model_error() {
        let text = "variant_id,beta_x_1,beta_x_2,se_x_1,se_x_2,beta_y,se_y\na,1,0,0,0,1,1\nb,0,1,0,0,1,1\n";
        let err = read_summary_csv::<f64, _>(text.as_bytes(), 2).unwrap_err();
        assert!(matches!(err, MvmrError::Model(_)));
    }
}
