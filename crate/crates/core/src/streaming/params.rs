//! Beta parameters of the cut-then-restrict pseudosplit.

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::polya::{check_volumes, prior_from_fraction, PolyaDepth};

/// Volumes of the two regions a cut at `xi` in dimension `dim` makes of `bbox`.
pub fn cut_region_volumes(bbox: &BoundingBox, dim: usize, xi: f64) -> Result<(f64, f64)> {
    if dim >= bbox.dim() {
        return Err(Error::DimensionMismatch {
            expected: bbox.dim(),
            got: dim + 1,
        });
    }
    let h = bbox.side(dim);
    if !(h > 0.0) {
        return Err(Error::DegenerateRegion(format!(
            "cannot cut dimension {dim} of zero length"
        )));
    }
    if !(bbox.lower()[dim] <= xi && xi <= bbox.upper()[dim]) {
        return Err(Error::InvalidInterval {
            lo: bbox.lower()[dim],
            hi: bbox.upper()[dim],
        });
    }
    let per_unit = bbox.volume() / h;
    Ok((
        per_unit * (xi - bbox.lower()[dim]),
        per_unit * (bbox.upper()[dim] - xi),
    ))
}

/// Posterior cut parameters `(χ0*, χ1*)`: volume-proportional prior plus counts.
pub fn set_cut_parameters(
    depth: PolyaDepth,
    n_left: usize,
    n_right: usize,
    v_left: f64,
    v_right: f64,
    gamma: f64,
) -> Result<(f64, f64)> {
    check_volumes(v_left, v_right)?;
    let [c0, c1] = prior_from_fraction(depth, v_left / (v_left + v_right), gamma);
    Ok((c0 + n_left as f64, c1 + n_right as f64))
}

/// Posterior restriction parameters `(ρ∈*, ρ¬*)`; only the observed side takes counts.
pub fn set_restriction_parameters(
    depth: PolyaDepth,
    n_obs: usize,
    v_obs: f64,
    v_comp: f64,
    gamma: f64,
) -> Result<(f64, f64)> {
    check_volumes(v_obs, v_comp)?;
    let [r_in, r_out] = prior_from_fraction(depth, v_obs / (v_obs + v_comp), gamma);
    Ok((r_in + n_obs as f64, r_out))
}
