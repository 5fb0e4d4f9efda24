use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{Logistic, SharedCost};
use crate::error::{Error, Result};

/// Feature rows with `+-1` labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledData {
    pub points: DMatrix<f64>,
    pub labels: DVector<f64>,
}

impl LabeledData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Splits samples into contiguous equal blocks, one logistic cost per node.
pub fn partition_logistic(data: &LabeledData, n_nodes: usize, rho: f64) -> Result<Vec<SharedCost>> {
    let m = data.len();
    if n_nodes == 0 || m % n_nodes != 0 {
        return Err(Error::NotDivisible { m, nodes: n_nodes });
    }
    let per = m / n_nodes;
    (0..n_nodes)
        .map(|i| {
            let pts = data.points.rows(i * per, per).into_owned();
            let lbl = data.labels.rows(i * per, per).into_owned();
            Ok(Arc::new(Logistic::new(pts, lbl, rho)?) as SharedCost)
        })
        .collect()
}

/// Reads a CSV whose columns are features followed by a final `+-1` label.
/// A first row that does not parse as numbers is treated as a header.
pub fn load_logistic_csv(path: impl AsRef<Path>) -> Result<LabeledData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path.as_ref())?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(vals) => rows.push(vals),
            Err(_) if idx == 0 => continue,
            Err(e) => return Err(Error::Dataset(format!("row {}: {e}", idx + 1))),
        }
    }
    let width = rows.first().map(Vec::len).ok_or_else(|| Error::Dataset("no data rows".into()))?;
    if width < 2 {
        return Err(Error::Dataset("need at least one feature column and a label column".into()));
    }
    let n = width - 1;
    let mut points = DMatrix::zeros(rows.len(), n);
    let mut labels = DVector::zeros(rows.len());
    for (j, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::Dataset(format!("row {} has {} columns, expected {width}", j + 1, row.len())));
        }
        for k in 0..n {
            points[(j, k)] = row[k];
        }
        let b = row[n];
        if b != 1.0 && b != -1.0 {
            return Err(Error::Dataset(format!("row {}: label {b} is not +-1", j + 1)));
        }
        labels[j] = b;
    }
    Ok(LabeledData { points, labels })
}
