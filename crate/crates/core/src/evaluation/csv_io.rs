//! CSV ingestion and export of datasets.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::learners::{DataError, Dataset, Matrix, Target, Task};

/// Reads a dataset with a header row. `target` names the target column;
/// every other column must hold finite reals. Classification targets are
/// mapped to ids in order of first appearance.
pub fn read_csv<R: Read>(reader: R, target: &str, task: Task) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .clone();
    let target_col = headers
        .iter()
        .position(|h| h.trim() == target)
        .ok_or_else(|| DataError::NoTargetColumn(target.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != target_col)
        .map(|(_, h)| h.trim().to_string())
        .collect();

    let mut data = Vec::new();
    let mut raw_targets = Vec::new();
    let mut rows = 0;
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| DataError::Csv(format!("row {row}: {e}")))?;
        if record.len() != headers.len() {
            return Err(DataError::Cell {
                row,
                col: "*".into(),
                reason: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            if j == target_col {
                raw_targets.push(cell.trim().to_string());
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| DataError::Cell {
                row,
                col: headers[j].to_string(),
                reason: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(DataError::Cell {
                    row,
                    col: headers[j].to_string(),
                    reason: format!("non-finite value {cell:?}"),
                });
            }
            data.push(v);
        }
        rows += 1;
    }

    let features = Matrix::new(rows, feature_names.len(), data);
    let (target, class_names) = if task == Task::Regression {
        let mut values = Vec::with_capacity(rows);
        for (i, t) in raw_targets.iter().enumerate() {
            let v: f64 = t.parse().map_err(|_| DataError::Cell {
                row: i + 1,
                col: target.to_string(),
                reason: format!("not a number: {t:?}"),
            })?;
            values.push(v);
        }
        (Target::Values(values), Vec::new())
    } else {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut names = Vec::new();
        let labels = raw_targets
            .iter()
            .map(|t| {
                *ids.entry(t.as_str()).or_insert_with(|| {
                    names.push(t.clone());
                    names.len() - 1
                })
            })
            .collect();
        if task == Task::Binary && names.len() != 2 {
            return Err(DataError::TargetKind {
                task: "binary",
                reason: format!("{} distinct target values", names.len()),
            });
        }
        (
            Target::Classes {
                labels,
                n_classes: names.len(),
            },
            names,
        )
    };
    let mut ds = Dataset::new(features, target, task, feature_names)?;
    ds.class_names = class_names;
    Ok(ds)
}

/// Writes features then a `target` column. Reals use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| DataError::Csv(e.to_string());
    let mut header: Vec<String> = data.feature_names.clone();
    header.push("target".into());
    w.write_record(&header).map_err(err)?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data.features.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(match &data.target {
            Target::Classes { labels, .. } => data
                .class_names
                .get(labels[i])
                .cloned()
                .unwrap_or_else(|| labels[i].to_string()),
            Target::Values(v) => v[i].to_string(),
        });
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| DataError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_classes_by_first_appearance() {
        let text = "a,label,b\n1,yes,2\n3,no,4\n5,yes,6\n";
        let d = read_csv(text.as_bytes(), "label", Task::Binary).unwrap();
        assert_eq!(d.labels(), Some(&[0, 1, 0][..]));
        assert_eq!(d.class_names, vec!["yes", "no"]);
        assert_eq!(d.feature_names, vec!["a", "b"]);
        assert_eq!(d.features.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn malformed_cell_reports_coordinates() {
        let text = "a,y\n1,0\nfoo,1\n";
        assert_eq!(
            read_csv(text.as_bytes(), "y", Task::Binary),
            Err(DataError::Cell {
                row: 2,
                col: "a".into(),
                reason: "not a number: \"foo\"".into()
            })
        );
        assert_eq!(
            read_csv(text.as_bytes(), "z", Task::Binary),
            Err(DataError::NoTargetColumn("z".into()))
        );
    }

    #[test]
    fn write_then_read_is_identical() {
        let rows = vec![vec![0.1, 1e-20], vec![-3.25, 7.0], vec![2.0, 0.3]];
        let d = Dataset::regression(&rows, vec![1.5, -0.1, 2.0 / 3.0]).unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), "target", Task::Regression).unwrap();
        assert_eq!(back, d);
    }
}
