use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: n_rows * n_cols,
                got: values.len(),
            });
        }
        Ok(Matrix {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Ok(Matrix {
            n_rows: rows.len(),
            n_cols,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        for (i, r) in self.rows().enumerate() {
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "non-finite value at row {i}, column {j}"
                )));
            }
        }
        Ok(())
    }
}

/// Observations with optional binary anomaly labels (1 = anomaly).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Matrix,
    pub labels: Option<Vec<u8>>,
    pub column_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(rows: Matrix, labels: Option<Vec<u8>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != rows.n_rows() {
                return Err(Error::DimensionMismatch {
                    expected: rows.n_rows(),
                    got: l.len(),
                });
            }
            if l.iter().any(|v| *v > 1) {
                return Err(Error::InvalidData("labels must be 0 or 1".into()));
            }
        }
        Ok(Dataset {
            rows,
            labels,
            column_names: None,
        })
    }

    pub fn n(&self) -> usize {
        self.rows.n_rows()
    }

    pub fn d(&self) -> usize {
        self.rows.n_cols()
    }

    pub fn n_anomalies(&self) -> usize {
        self.labels
            .as_ref()
            .map(|l| l.iter().filter(|v| **v == 1).count())
            .unwrap_or(0)
    }
}
