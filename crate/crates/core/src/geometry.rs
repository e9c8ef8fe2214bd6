use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed axis-aligned box `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !l.is_finite() || !u.is_finite() || l > u {
                return Err(Error::InvalidInterval { lo: *l, hi: *u });
            }
        }
        Ok(BoundingBox { lower, upper })
    }

    /// Degenerate box holding a single point.
    pub fn point(x: &[f64]) -> Self {
        BoundingBox {
            lower: x.to_vec(),
            upper: x.to_vec(),
        }
    }

    /// Smallest box containing every row yielded by `points`.
    pub fn of_points<'a, I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut iter = points.into_iter();
        let first = iter.next().ok_or(Error::EmptyInput)?;
        let mut bbox = BoundingBox::point(first);
        for p in iter {
            if p.len() != bbox.dim() {
                return Err(Error::DimensionMismatch {
                    expected: bbox.dim(),
                    got: p.len(),
                });
            }
            bbox.extend(p);
        }
        Ok(bbox)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn sides(&self) -> Vec<f64> {
        (0..self.dim()).map(|d| self.side(d)).collect()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|d| self.side(d)).product()
    }

    /// Sum of log side lengths; `-inf` for flat boxes.
    pub fn log_volume(&self) -> f64 {
        (0..self.dim()).map(|d| self.side(d).ln()).sum()
    }

    /// Sum of side lengths.
    pub fn linear_dimension(&self) -> f64 {
        (0..self.dim()).map(|d| self.side(d)).sum()
    }

    /// True when every side has positive length.
    pub fn is_full_dimensional(&self) -> bool {
        (0..self.dim()).all(|d| self.side(d) > 0.0)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        self.contains(&other.lower) && self.contains(&other.upper)
    }

    pub fn extend(&mut self, x: &[f64]) {
        for (d, v) in x.iter().enumerate() {
            if *v < self.lower[d] {
                self.lower[d] = *v;
            }
            if *v > self.upper[d] {
                self.upper[d] = *v;
            }
        }
    }

    /// Per-dimension distance by which `x` lies outside the box, below and above.
    pub fn extension(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let below = self
            .lower
            .iter()
            .zip(x)
            .map(|(l, v)| (l - v).max(0.0))
            .collect();
        let above = self
            .upper
            .iter()
            .zip(x)
            .map(|(u, v)| (v - u).max(0.0))
            .collect();
        (below, above)
    }

    /// The two halves of the box on either side of `loc` in dimension `dim`.
    pub fn split(&self, dim: usize, loc: f64) -> (BoundingBox, BoundingBox) {
        let mut left = self.clone();
        let mut right = self.clone();
        left.upper[dim] = loc;
        right.lower[dim] = loc;
        (left, right)
    }

    /// True when `x` lies on a face of the box in at least one dimension.
    pub fn on_boundary(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .any(|(d, v)| *v == self.lower[d] || *v == self.upper[d])
    }
}
