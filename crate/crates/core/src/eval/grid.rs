use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::geometry::BoundingBox;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub center: Vec<f64>,
    pub density: f64,
}

/// Forest density at the centres of a `resolution`-per-axis grid over `bounds`.
/// Cells are ordered with the last axis varying fastest.
pub fn density_grid(forest: &Forest, bounds: &BoundingBox, resolution: usize) -> Result<Vec<GridCell>> {
    let dim = bounds.dim();
    if dim > 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    if dim != forest.dim() {
        return Err(Error::DimensionMismatch {
            expected: forest.dim(),
            got: dim,
        });
    }
    if resolution == 0 {
        return Err(Error::InvalidConfig("grid resolution must be positive".into()));
    }
    let step: Vec<f64> = bounds.sides().iter().map(|s| s / resolution as f64).collect();
    let total = resolution.pow(dim as u32);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rest = k;
            let mut center = vec![0.0; dim];
            for d in (0..dim).rev() {
                let i = rest % resolution;
                rest /= resolution;
                center[d] = bounds.lower()[d] + (i as f64 + 0.5) * step[d];
            }
            let density = forest.density(&center)?;
            Ok(GridCell { center, density })
        })
        .collect()
}

/// Volume of one cell of the grid produced by [`density_grid`].
pub fn cell_volume(bounds: &BoundingBox, resolution: usize) -> f64 {
    bounds.sides().iter().map(|s| s / resolution as f64).product()
}
