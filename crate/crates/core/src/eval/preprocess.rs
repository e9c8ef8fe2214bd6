use crate::data::Matrix;
use crate::error::{Error, Result};

/// Overlapping windows of `width` consecutive values, stride 1.
pub fn shingle(series: &[f64], width: usize) -> Result<Matrix> {
    if width == 0 {
        return Err(Error::InvalidConfig("shingle width must be positive".into()));
    }
    if series.len() < width {
        return Err(Error::TooShort {
            len: series.len(),
            width,
        });
    }
    let values = series.windows(width).flatten().copied().collect();
    Matrix::new(series.len() - width + 1, width, values)
}

/// Each window takes the label of its last element.
pub fn shingle_labels(labels: &[u8], width: usize) -> Result<Vec<u8>> {
    if width == 0 {
        return Err(Error::InvalidConfig("shingle width must be positive".into()));
    }
    if labels.len() < width {
        return Err(Error::TooShort {
            len: labels.len(),
            width,
        });
    }
    Ok(labels[width - 1..].to_vec())
}

/// Per-column `(x − min)/(max − min)`; constant columns become 0.
pub fn minmax_scale(data: &Matrix) -> Matrix {
    let (n, d) = (data.n_rows(), data.n_cols());
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in data.rows() {
        for (j, v) in row.iter().enumerate() {
            lo[j] = lo[j].min(*v);
            hi[j] = hi[j].max(*v);
        }
    }
    let mut values = Vec::with_capacity(n * d);
    for row in data.rows() {
        for (j, v) in row.iter().enumerate() {
            let range = hi[j] - lo[j];
            values.push(if range > 0.0 { ((v - lo[j]) / range).clamp(0.0, 1.0) } else { 0.0 });
        }
    }
    Matrix::new(n, d, values).expect("shape preserved")
}
