//! Ensembles of independently sampled trees with mass-based anomaly scores.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::mondrian::{CutSource, TreeConfig};
use crate::polya::BatchTree;
use crate::rng::RngState;
use crate::streaming::MpTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Batch,
    Streaming,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" => Ok(ModelKind::Batch),
            "streaming" => Ok(ModelKind::Streaming),
            other => Err(Error::InvalidConfig(format!("unknown model kind '{other}'"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Batch => "batch",
            ModelKind::Streaming => "streaming",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "trees", rename_all = "lowercase")]
pub enum Trees {
    Batch(Vec<BatchTree>),
    Streaming(Vec<MpTree>),
}

/// Per-point forest output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    /// Mean leaf mass over trees; lower is more anomalous.
    pub mass_score: f64,
    pub density: f64,
    /// Number of trees in which the point is an ε-anomaly.
    pub anomaly_count: usize,
    pub flag: bool,
}

/// Leaf mass at most `epsilon`.
pub fn is_epsilon_anomaly(mass: f64, epsilon: f64) -> bool {
    mass <= epsilon
}

/// At least a `phi` fraction of `n_trees` trees flag the point; always true at `phi = 0`.
pub fn meets_vote(count: usize, n_trees: usize, phi: f64) -> bool {
    phi <= 0.0 || count as f64 / n_trees as f64 >= phi
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    config: TreeConfig,
    #[serde(rename = "model")]
    trees: Trees,
}

impl Forest {
    /// Fits `n_trees` trees in parallel; tree `i` uses stream `i` of `config.seed`.
    pub fn fit(data: &Matrix, config: &TreeConfig, kind: ModelKind, n_trees: usize) -> Result<Self> {
        if n_trees == 0 {
            return Err(Error::InvalidConfig("a forest needs at least one tree".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyInput);
        }
        config.validate()?;
        let base = RngState::new(config.seed);
        let trees = match kind {
            ModelKind::Batch => Trees::Batch(
                (0..n_trees as u64)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng = base.fork(i);
                        BatchTree::sample(data, None, config, &mut CutSource::Random(&mut rng))
                    })
                    .collect::<Result<_>>()?,
            ),
            ModelKind::Streaming => Trees::Streaming(
                (0..n_trees as u64)
                    .into_par_iter()
                    .map(|i| MpTree::sample(data, config, base.fork(i)))
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Forest {
            config: config.clone(),
            trees,
        })
    }

    /// Streaming forest with no points yet.
    pub fn empty_streaming(dim: usize, config: &TreeConfig, n_trees: usize) -> Result<Self> {
        if n_trees == 0 {
            return Err(Error::InvalidConfig("a forest needs at least one tree".into()));
        }
        let base = RngState::new(config.seed);
        let trees = (0..n_trees as u64)
            .map(|i| MpTree::empty(dim, config, base.fork(i)))
            .collect::<Result<_>>()?;
        Ok(Forest {
            config: config.clone(),
            trees: Trees::Streaming(trees),
        })
    }

    /// Wraps already fitted trees, which must share a dimension.
    pub fn from_trees(trees: Trees, config: &TreeConfig) -> Result<Self> {
        let dims: Vec<usize> = match &trees {
            Trees::Batch(t) => t.iter().map(|t| t.dim()).collect(),
            Trees::Streaming(t) => t.iter().map(|t| t.dim()).collect(),
        };
        let Some(&first) = dims.first() else {
            return Err(Error::InvalidConfig("a forest needs at least one tree".into()));
        };
        if let Some(&other) = dims.iter().find(|d| **d != first) {
            return Err(Error::DimensionMismatch {
                expected: first,
                got: other,
            });
        }
        Ok(Forest {
            config: config.clone(),
            trees,
        })
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn trees(&self) -> &Trees {
        &self.trees
    }

    pub fn kind(&self) -> ModelKind {
        match self.trees {
            Trees::Batch(_) => ModelKind::Batch,
            Trees::Streaming(_) => ModelKind::Streaming,
        }
    }

    pub fn n_trees(&self) -> usize {
        match &self.trees {
            Trees::Batch(t) => t.len(),
            Trees::Streaming(t) => t.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.trees {
            Trees::Batch(t) => t[0].dim(),
            Trees::Streaming(t) => t[0].dim(),
        }
    }

    /// Smallest box holding every tree's root box; `None` while all trees are empty.
    pub fn domain(&self) -> Option<BoundingBox> {
        let boxes: Vec<&BoundingBox> = match &self.trees {
            Trees::Batch(t) => t.iter().map(|t| t.domain()).collect(),
            Trees::Streaming(t) => t.iter().filter_map(|t| t.domain()).collect(),
        };
        let (first, rest) = boxes.split_first()?;
        let mut out = (*first).clone();
        for b in rest {
            out.extend(b.lower());
            out.extend(b.upper());
        }
        Some(out)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("query point is not finite".into()));
        }
        Ok(())
    }

    /// `(leaf mass, density)` of `x` in each tree; zero where `x` falls outside a tree.
    pub fn per_tree(&self, x: &[f64]) -> Result<Vec<(f64, f64)>> {
        self.check_point(x)?;
        match &self.trees {
            Trees::Batch(trees) => trees
                .iter()
                .map(|t| match (t.leaf_mass(x), t.density(x)) {
                    (Ok(m), Ok(d)) => Ok((m, d)),
                    (Err(Error::OutOfDomain), _) => Ok((0.0, 0.0)),
                    (Err(e), _) | (_, Err(e)) => Err(e),
                })
                .collect(),
            Trees::Streaming(trees) => trees
                .iter()
                .map(|t| Ok((t.leaf_mass(x)?.0, t.density(x)?)))
                .collect(),
        }
    }

    /// Mean of the per-tree densities.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        let per = self.per_tree(x)?;
        Ok(per.iter().map(|p| p.1).sum::<f64>() / per.len() as f64)
    }

    /// Mean leaf mass over trees.
    pub fn mass_score(&self, x: &[f64]) -> Result<f64> {
        let per = self.per_tree(x)?;
        Ok(per.iter().map(|p| p.0).sum::<f64>() / per.len() as f64)
    }

    /// Whether `x` is an ε-anomaly in tree `index`.
    pub fn epsilon_anomaly(&self, index: usize, x: &[f64], epsilon: f64) -> Result<bool> {
        check_unit("epsilon", epsilon)?;
        let per = self.per_tree(x)?;
        let (mass, _) = per.get(index).ok_or(Error::InvalidConfig(format!(
            "tree index {index} out of range for {} trees",
            per.len()
        )))?;
        Ok(is_epsilon_anomaly(*mass, epsilon))
    }

    /// Scores `x` and decides whether it is an (ε, φ)-anomaly.
    pub fn eps_phi_anomaly(&self, x: &[f64], epsilon: f64, phi: f64) -> Result<ScoreReport> {
        check_unit("epsilon", epsilon)?;
        check_unit("phi", phi)?;
        let per = self.per_tree(x)?;
        let n = per.len() as f64;
        let anomaly_count = per.iter().filter(|p| is_epsilon_anomaly(p.0, epsilon)).count();
        Ok(ScoreReport {
            mass_score: per.iter().map(|p| p.0).sum::<f64>() / n,
            density: per.iter().map(|p| p.1).sum::<f64>() / n,
            anomaly_count,
            flag: meets_vote(anomaly_count, per.len(), phi),
        })
    }

    /// [`Forest::eps_phi_anomaly`] for every row, in parallel.
    pub fn score_all(&self, data: &Matrix, epsilon: f64, phi: f64) -> Result<Vec<ScoreReport>> {
        if data.n_cols() != self.dim() && !data.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: data.n_cols(),
            });
        }
        (0..data.n_rows())
            .into_par_iter()
            .map(|i| self.eps_phi_anomaly(data.row(i), epsilon, phi))
            .collect()
    }

    /// Mean leaf mass for every row, in parallel.
    pub fn mass_scores(&self, data: &Matrix) -> Result<Vec<f64>> {
        Ok(self.score_all(data, 0.0, 0.0)?.into_iter().map(|r| r.mass_score).collect())
    }

    fn streaming_mut(&mut self) -> Result<&mut Vec<MpTree>> {
        match &mut self.trees {
            Trees::Streaming(t) => Ok(t),
            Trees::Batch(_) => Err(Error::InvalidConfig(
                "batch forests do not support insertion or deletion".into(),
            )),
        }
    }

    /// Inserts `z` into every tree in parallel and returns its id.
    pub fn insert(&mut self, z: &[f64]) -> Result<usize> {
        self.check_point(z)?;
        let ids = self
            .streaming_mut()?
            .par_iter_mut()
            .map(|t| t.insert(z))
            .collect::<Result<Vec<_>>>()?;
        let id = ids[0];
        debug_assert!(ids.iter().all(|i| *i == id));
        Ok(id)
    }

    /// Deletes point `id` from every tree in parallel.
    pub fn delete(&mut self, id: usize) -> Result<()> {
        let trees = self.streaming_mut()?;
        if trees[0].point(id).is_none() {
            return Err(Error::NotFound(id));
        }
        trees.par_iter_mut().try_for_each(|t| t.delete(id))
    }
}
