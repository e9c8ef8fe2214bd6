//! Finite Pólya tree priors and the batch model: a Mondrian process partition
//! whose cells receive Beta-Binomial posterior masses.

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::mondrian::{build_mondrian_process, CutSource, NodeId, Tree, TreeConfig};

/// Depth of a split in the Pólya tree, which sets the prior strength `γ(d+1)²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PolyaDepth(pub usize);

impl PolyaDepth {
    /// The cut stage of a streaming node at absolute depth `d` sits at `2d`.
    pub fn cut_stage(depth: usize) -> Self {
        PolyaDepth(2 * depth)
    }

    /// The restriction stage below a node at absolute depth `d` sits at `2d + 1`.
    pub fn restriction_stage(depth: usize) -> Self {
        PolyaDepth(2 * depth + 1)
    }

    pub fn strength(self, gamma: f64) -> f64 {
        let k = (self.0 + 1) as f64;
        gamma * k * k
    }
}

/// Prior parameters when a fraction `frac` of the volume lies on side 0.
pub(crate) fn prior_from_fraction(depth: PolyaDepth, frac: f64, gamma: f64) -> [f64; 2] {
    let k = depth.strength(gamma);
    [k * frac, k * (1.0 - frac)]
}

pub(crate) fn check_volumes(v0: f64, v1: f64) -> Result<()> {
    if !(v0 > 0.0) || !(v1 > 0.0) || !v0.is_finite() || !v1.is_finite() {
        return Err(Error::DegenerateRegion(format!(
            "volumes must be positive, got ({v0}, {v1})"
        )));
    }
    Ok(())
}

/// Pólya prior Beta parameters `γ(d+1)²·v_k/(v0+v1)` for a split into volumes `v0`, `v1`.
pub fn polya_prior(depth: usize, v0: f64, v1: f64, gamma: f64) -> Result<(f64, f64)> {
    check_volumes(v0, v1)?;
    let [a0, a1] = prior_from_fraction(PolyaDepth(depth), v0 / (v0 + v1), gamma);
    Ok((a0, a1))
}

/// Mean of `Beta(a, b)`, i.e. the fraction of mass sent to side 0.
pub fn beta_mean(a: f64, b: f64) -> f64 {
    a / (a + b)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolyaNodeParams {
    /// Posterior `(α0, α1)` of the node's split; `None` on leaves.
    pub alpha: Option<[f64; 2]>,
    /// Probability mass of the node's cell.
    pub mass: f64,
}

/// Batch Mondrian Pólya tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchTree {
    tree: Tree<PolyaNodeParams>,
    config: TreeConfig,
}

impl BatchTree {
    /// Samples a Mondrian process on `domain` (the data bounding box when
    /// `None`) and fits Pólya masses to `data`.
    pub fn sample(
        data: &Matrix,
        domain: Option<BoundingBox>,
        config: &TreeConfig,
        source: &mut CutSource<'_>,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput);
        }
        data.check_finite()?;
        config.validate()?;
        let domain = match domain {
            Some(d) => d,
            None => BoundingBox::of_points(data.rows())?,
        };
        if data.n_cols() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: data.n_cols(),
            });
        }
        if data.rows().any(|r| !domain.contains(r)) {
            return Err(Error::OutOfDomain);
        }
        let tree = build_mondrian_process::<()>(&domain, data, config, source)?;
        fit_bmpt(&tree, data, config)
    }

    pub fn tree(&self) -> &Tree<PolyaNodeParams> {
        &self.tree
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.tree.dim()
    }

    pub fn domain(&self) -> &BoundingBox {
        &self.tree.node(self.root()).bbox
    }

    fn root(&self) -> NodeId {
        self.tree.root().expect("batch trees are never empty")
    }

    pub fn leaf_of(&self, x: &[f64]) -> Result<NodeId> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.domain().contains(x) {
            return Err(Error::OutOfDomain);
        }
        Ok(*self.tree.path(x).last().expect("non-empty path"))
    }

    pub fn leaf_mass(&self, x: &[f64]) -> Result<f64> {
        Ok(self.tree.node(self.leaf_of(x)?).payload.mass)
    }

    /// Piecewise-constant density; `+inf` on cells of zero volume.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        let leaf = self.tree.node(self.leaf_of(x)?);
        Ok(mass_over_volume(leaf.payload.mass, leaf.bbox.volume()))
    }

    /// `(leaf, mass, volume)` for every cell.
    pub fn leaves(&self) -> Vec<(NodeId, f64, f64)> {
        self.tree
            .leaves()
            .into_iter()
            .map(|id| {
                let n = self.tree.node(id);
                (id, n.payload.mass, n.bbox.volume())
            })
            .collect()
    }

    /// Prior parameters implied by the current geometry, for conjugacy checks.
    pub fn prior_alpha(&self, id: NodeId) -> Option<[f64; 2]> {
        let node = self.tree.node(id);
        let split = node.split.as_ref()?;
        let frac = (split.loc - node.bbox.lower()[split.dim]) / node.bbox.side(split.dim);
        Some(prior_from_fraction(PolyaDepth(node.depth), frac, self.config.gamma))
    }
}

pub(crate) fn mass_over_volume(mass: f64, volume: f64) -> f64 {
    if volume > 0.0 {
        mass / volume
    } else if mass > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Routes `data` through a Mondrian process partition and sets posterior
/// Beta parameters and masses top-down from a unit root mass.
pub fn fit_bmpt(tree: &Tree<()>, data: &Matrix, config: &TreeConfig) -> Result<BatchTree> {
    config.validate()?;
    let root = tree.root().ok_or(Error::EmptyInput)?;
    if !data.is_empty() && data.n_cols() != tree.dim() {
        return Err(Error::DimensionMismatch {
            expected: tree.dim(),
            got: data.n_cols(),
        });
    }
    let mut fitted = tree.clone().map_payload(|_| PolyaNodeParams::default());
    for id in fitted.preorder() {
        let node = fitted.node_mut(id);
        node.count = 0;
        node.points.clear();
    }
    let domain = fitted.node(root).bbox.clone();
    for (i, row) in data.rows().enumerate() {
        if !domain.contains(row) {
            return Err(Error::OutOfDomain);
        }
        let path = fitted.path(row);
        for id in &path {
            fitted.node_mut(*id).count += 1;
        }
        fitted.node_mut(*path.last().expect("non-empty path")).points.push(i);
    }
    fitted.node_mut(root).payload.mass = 1.0;
    for id in fitted.preorder() {
        let node = fitted.node(id);
        let Some(split) = node.split.clone() else {
            continue;
        };
        let frac = (split.loc - node.bbox.lower()[split.dim]) / node.bbox.side(split.dim);
        let [p0, p1] = prior_from_fraction(PolyaDepth(node.depth), frac, config.gamma);
        let alpha = [
            p0 + fitted.node(split.left).count as f64,
            p1 + fitted.node(split.right).count as f64,
        ];
        let mass = node.payload.mass;
        let mu = beta_mean(alpha[0], alpha[1]);
        fitted.node_mut(id).payload.alpha = Some(alpha);
        fitted.node_mut(split.left).payload.mass = mass * mu;
        fitted.node_mut(split.right).payload.mass = mass * (1.0 - mu);
    }
    Ok(BatchTree {
        tree: fitted,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;
    use crate::mondrian::ScriptedCut;
    use std::collections::VecDeque;

    fn unit_square() -> BoundingBox {
        BoundingBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn prior_examples() {
        assert_eq!(polya_prior(0, 1.0, 1.0, 1.0).unwrap(), (0.5, 0.5));
        assert_eq!(polya_prior(2, 0.2, 0.2, 1.0).unwrap(), (4.5, 4.5));
        let (a, b) = polya_prior(0, 0.3, 0.7, 1.0).unwrap();
        assert!((a - 0.3).abs() < 1e-15 && (b - 0.7).abs() < 1e-15);
        assert!(matches!(
            polya_prior(0, 0.0, 1.0, 1.0),
            Err(Error::DegenerateRegion(_))
        ));
    }

    #[test]
    fn polya_depth_stages() {
        assert_eq!(PolyaDepth::cut_stage(1), PolyaDepth(2));
        assert_eq!(PolyaDepth::restriction_stage(1), PolyaDepth(3));
        assert_eq!(PolyaDepth::cut_stage(0).strength(1.0), 1.0);
        assert_eq!(PolyaDepth::restriction_stage(0).strength(2.0), 8.0);
    }

    #[test]
    fn root_only_tree_has_unit_density() {
        let data = Matrix::from_rows(&[[0.2, 0.3], [0.7, 0.1]]).unwrap();
        let cfg = TreeConfig {
            lifetime: 0.0,
            ..TreeConfig::default()
        };
        let mut rng = RngState::new(0);
        let bt = BatchTree::sample(&data, Some(unit_square()), &cfg, &mut CutSource::Random(&mut rng)).unwrap();
        assert_eq!(bt.leaf_mass(&[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(bt.density(&[0.9, 0.9]).unwrap(), 1.0);
        assert!(matches!(bt.density(&[1.5, 0.5]), Err(Error::OutOfDomain)));
    }

    #[test]
    fn injected_half_split_masses() {
        let data = Matrix::from_rows(&[[0.1, 0.1], [0.2, 0.9], [0.4, 0.5], [0.9, 0.9]]).unwrap();
        let cfg = TreeConfig {
            max_depth: 1,
            ..TreeConfig::default()
        };
        let mut script = VecDeque::from(vec![ScriptedCut::new(0, 0.5, 0.3)]);
        let bt = BatchTree::sample(&data, Some(unit_square()), &cfg, &mut CutSource::Scripted(&mut script)).unwrap();
        let root = bt.tree().node(bt.tree().root().unwrap());
        assert_eq!(root.payload.alpha, Some([3.5, 1.5]));
        assert!((bt.leaf_mass(&[0.2, 0.2]).unwrap() - 0.7).abs() < 1e-12);
        assert!((bt.leaf_mass(&[0.9, 0.9]).unwrap() - 0.3).abs() < 1e-12);
        assert!((bt.density(&[0.9, 0.9]).unwrap() - 0.6).abs() < 1e-12);
    }

    fn random_batch(seed: u64, gamma: f64) -> (BatchTree, Matrix) {
        let mut rng = RngState::new(seed);
        let values = (0..200 * 2).map(|_| rng.next_unit().powi(2)).collect();
        let data = Matrix::new(200, 2, values).unwrap();
        let cfg = TreeConfig {
            max_depth: 6,
            gamma,
            ..TreeConfig::default()
        };
        let mut tree_rng = RngState::new(seed + 1000);
        let bt = BatchTree::sample(&data, Some(unit_square()), &cfg, &mut CutSource::Random(&mut tree_rng)).unwrap();
        (bt, data)
    }

    #[test]
    fn leaf_masses_sum_to_one_and_posterior_is_prior_plus_counts() {
        for seed in 0..20 {
            let (bt, _) = random_batch(seed, 1.0);
            let total: f64 = bt.leaves().iter().map(|l| l.1).sum();
            assert!((total - 1.0).abs() < 1e-9);
            let t = bt.tree();
            for id in t.preorder() {
                if let Some((l, r)) = t.children(id) {
                    let alpha = t.node(id).payload.alpha.unwrap();
                    let prior = bt.prior_alpha(id).unwrap();
                    assert_eq!(alpha[0], prior[0] + t.node(l).count as f64);
                    assert_eq!(alpha[1], prior[1] + t.node(r).count as f64);
                }
            }
        }
    }

    #[test]
    fn grid_integral_of_density_is_one() {
        let (bt, _) = random_batch(3, 1.0);
        let m = 200;
        let h = 1.0 / m as f64;
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
                total += bt.density(&x).unwrap() * h * h;
            }
        }
        assert!((total - 1.0).abs() < 0.02, "integral {total}");
    }

    #[test]
    fn strong_prior_recovers_volume_fractions() {
        let (bt, _) = random_batch(5, 1e6);
        let t = bt.tree();
        for id in t.preorder() {
            if let Some((l, _)) = t.children(id) {
                let node = t.node(id);
                if node.payload.mass == 0.0 {
                    continue;
                }
                let ratio = t.node(l).payload.mass / node.payload.mass;
                let frac = t.node(l).bbox.volume() / node.bbox.volume();
                assert!((ratio - frac).abs() < 1e-3, "ratio {ratio} vs {frac}");
            }
        }
    }

    #[test]
    fn refit_rejects_out_of_domain_points() {
        let (bt, _) = random_batch(1, 1.0);
        let plain = bt.tree().clone().map_payload(|_| ());
        let outside = Matrix::from_rows(&[[2.0, 0.5]]).unwrap();
        assert!(matches!(
            fit_bmpt(&plain, &outside, bt.config()),
            Err(Error::OutOfDomain)
        ));
    }
}
