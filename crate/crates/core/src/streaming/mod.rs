//! Streaming Mondrian Pólya trees.
//!
//! Every internal node of a data-restricted Mondrian tree performs two
//! stages: a cut of its box into two regions, then a restriction of each
//! region to the bounding box of the points it received. The restriction
//! leaves an explicit complementary region that holds prior-only mass.
//! All Beta parameters are a function of the current geometry and counts,
//! so insertions and deletions recompute them on the nodes they touch.

mod params;
mod update;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::mondrian::{build_mondrian_tree, CutSource, NodeId, ScriptedCut, Tree, TreeConfig, TreeNode};
use crate::polya::{beta_mean, mass_over_volume, prior_from_fraction, PolyaDepth};
use crate::rng::RngState;
use crate::serde_util;

pub use params::{cut_region_volumes, set_cut_parameters, set_restriction_parameters};
pub use update::rescale_time;

const IN: char = '∈';
const OUT: char = '¬';

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    #[default]
    Internal,
    /// Leaf whose box has a zero side length, e.g. a single point.
    ObservedTypeI,
    /// Leaf whose box has every side positive.
    ObservedTypeII,
}

/// Per-node annotation of a streaming tree.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MptParams {
    pub kind: NodeKind,
    /// Posterior cut parameters `(χ0*, χ1*)`; `None` on leaves.
    pub chi: Option<[f64; 2]>,
    /// Posterior restriction parameters `(ρ∈*, ρ¬*)`; `None` unless restricted.
    pub rho: Option<[f64; 2]>,
    #[serde(with = "serde_util")]
    pub observed_log_volume: f64,
    /// Log volume of the cut region the node lives in; its own box at the root.
    #[serde(with = "serde_util")]
    pub region_log_volume: f64,
    pub encoding: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeafKind {
    ObservedTypeI,
    ObservedTypeII,
    Complementary,
}

/// Terminal region reached by a query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafHit {
    pub node: NodeId,
    pub kind: LeafKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafInfo {
    pub node: NodeId,
    pub kind: LeafKind,
    pub encoding: String,
    pub mass: f64,
    #[serde(with = "serde_util")]
    pub log_volume: f64,
}

impl LeafInfo {
    pub fn volume(&self) -> f64 {
        self.log_volume.exp()
    }

    pub fn density(&self) -> f64 {
        mass_over_volume(self.mass, self.volume())
    }
}

/// Streaming Mondrian Pólya tree over an append-only table of point ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpTree {
    tree: Tree<MptParams>,
    config: TreeConfig,
    points: Vec<Option<Vec<f64>>>,
    rng: RngState,
}

impl MpTree {
    /// Tree with no points; the first insertion becomes the root leaf.
    pub fn empty(dim: usize, config: &TreeConfig, rng: RngState) -> Result<Self> {
        config.validate()?;
        if dim == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(MpTree {
            tree: Tree::empty(dim),
            config: config.clone(),
            points: Vec::new(),
            rng,
        })
    }

    /// Samples a Mondrian tree on `data` and annotates it. Row `i` gets id `i`;
    /// `rng` is kept for later insertions.
    pub fn sample(data: &Matrix, config: &TreeConfig, mut rng: RngState) -> Result<Self> {
        let tree = Self::build(data, config, &mut CutSource::Random(&mut rng))?;
        Self::annotate(tree, data, config, rng)
    }

    /// As [`MpTree::sample`] with cuts taken from `script`.
    pub fn sample_scripted(
        data: &Matrix,
        config: &TreeConfig,
        script: &mut VecDeque<ScriptedCut>,
    ) -> Result<Self> {
        let tree = Self::build(data, config, &mut CutSource::Scripted(script))?;
        Self::annotate(tree, data, config, RngState::new(config.seed))
    }

    fn build(data: &Matrix, config: &TreeConfig, source: &mut CutSource<'_>) -> Result<Tree<MptParams>> {
        if data.is_empty() || data.n_cols() == 0 {
            return Err(Error::EmptyInput);
        }
        data.check_finite()?;
        config.validate()?;
        build_mondrian_tree(data, (0..data.n_rows()).collect(), config, source)
    }

    fn annotate(tree: Tree<MptParams>, data: &Matrix, config: &TreeConfig, rng: RngState) -> Result<Self> {
        let mut mpt = MpTree {
            tree,
            config: config.clone(),
            points: data.rows().map(|r| Some(r.to_vec())).collect(),
            rng,
        };
        if let Some(root) = mpt.tree.root() {
            mpt.refresh_subtree(root);
        }
        Ok(mpt)
    }

    pub fn tree(&self) -> &Tree<MptParams> {
        &self.tree
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.tree.dim()
    }

    /// Number of points currently stored.
    pub fn n_points(&self) -> usize {
        self.tree.root().map_or(0, |r| self.tree.node(r).count)
    }

    /// Coordinates of a stored point.
    pub fn point(&self, id: usize) -> Option<&[f64]> {
        self.points.get(id).and_then(|p| p.as_deref())
    }

    /// Ids of all stored points in increasing order.
    pub fn point_ids(&self) -> Vec<usize> {
        (0..self.points.len()).filter(|i| self.points[*i].is_some()).collect()
    }

    /// Bounding box of the stored data; `None` for an empty tree.
    pub fn domain(&self) -> Option<&BoundingBox> {
        self.tree.root().map(|r| &self.tree.node(r).bbox)
    }

    /// A child is restricted when it has a full-dimensional box of its own.
    fn is_restricted(&self, node: &TreeNode<MptParams>) -> bool {
        node.parent.is_some() && node.bbox.is_full_dimensional()
    }

    /// Mass of the terminal region containing `x`, with that region.
    /// Points outside the data bounding box get mass 0 and no region.
    pub fn leaf_mass(&self, x: &[f64]) -> Result<(f64, Option<LeafHit>)> {
        Ok(match self.locate(x)? {
            Some((mass, hit, _)) => (mass, Some(hit)),
            None => (0.0, None),
        })
    }

    /// Leaf mass divided by the volume of the terminal region.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(match self.locate(x)? {
            Some((mass, _, log_volume)) => mass_over_volume(mass, log_volume.exp()),
            None => 0.0,
        })
    }

    fn locate(&self, x: &[f64]) -> Result<Option<(f64, LeafHit, f64)>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("query point is not finite".into()));
        }
        let Some(mut cur) = self.tree.root() else {
            return Ok(None);
        };
        if !self.tree.node(cur).bbox.contains(x) {
            return Ok(None);
        }
        let mut mass = 1.0;
        loop {
            let node = self.tree.node(cur);
            let Some(split) = &node.split else {
                let log_volume = if node.parent.is_some() && !self.is_restricted(node) {
                    node.payload.region_log_volume
                } else {
                    node.payload.observed_log_volume
                };
                let hit = LeafHit {
                    node: cur,
                    kind: leaf_kind(node.payload.kind),
                };
                return Ok(Some((mass, hit, log_volume)));
            };
            let [c0, c1] = node.payload.chi.expect("internal nodes carry cut parameters");
            let child = if x[split.dim] <= split.loc {
                mass *= beta_mean(c0, c1);
                split.left
            } else {
                mass *= beta_mean(c1, c0);
                split.right
            };
            let c = self.tree.node(child);
            if self.is_restricted(c) {
                let [r_in, r_out] = c.payload.rho.expect("restricted nodes carry restriction parameters");
                if !c.bbox.contains(x) {
                    mass *= beta_mean(r_out, r_in);
                    let hit = LeafHit {
                        node: child,
                        kind: LeafKind::Complementary,
                    };
                    return Ok(Some((mass, hit, complement_log_volume(&c.payload))));
                }
                mass *= beta_mean(r_in, r_out);
            }
            cur = child;
        }
    }

    /// Every terminal region: observed leaves and the complementary region
    /// left by each restriction. Complements of zero volume are omitted.
    pub fn leaves(&self) -> Vec<LeafInfo> {
        let mut out = Vec::new();
        let Some(root) = self.tree.root() else {
            return out;
        };
        let mut stack = vec![(root, 1.0)];
        while let Some((id, mass)) = stack.pop() {
            let node = self.tree.node(id);
            let Some(split) = &node.split else {
                let log_volume = if node.parent.is_some() && !self.is_restricted(node) {
                    node.payload.region_log_volume
                } else {
                    node.payload.observed_log_volume
                };
                out.push(LeafInfo {
                    node: id,
                    kind: leaf_kind(node.payload.kind),
                    encoding: node.payload.encoding.clone(),
                    mass,
                    log_volume,
                });
                continue;
            };
            let [c0, c1] = node.payload.chi.expect("internal nodes carry cut parameters");
            for (child, share) in [(split.right, beta_mean(c1, c0)), (split.left, beta_mean(c0, c1))] {
                let c = self.tree.node(child);
                let mut m = mass * share;
                if self.is_restricted(c) {
                    let [r_in, r_out] = c.payload.rho.expect("restricted nodes carry restriction parameters");
                    if r_out > 0.0 {
                        let mut encoding = c.payload.encoding.clone();
                        encoding.pop();
                        encoding.push(OUT);
                        out.push(LeafInfo {
                            node: child,
                            kind: LeafKind::Complementary,
                            encoding,
                            mass: m * beta_mean(r_out, r_in),
                            log_volume: complement_log_volume(&c.payload),
                        });
                    }
                    m *= beta_mean(r_in, r_out);
                }
                stack.push((child, m));
            }
        }
        out
    }

    /// Cut prior implied by the current geometry of an internal node.
    pub fn prior_chi(&self, id: NodeId) -> Option<[f64; 2]> {
        let node = self.tree.node(id);
        let split = node.split.as_ref()?;
        let frac = (split.loc - node.bbox.lower()[split.dim]) / node.bbox.side(split.dim);
        Some(prior_from_fraction(
            PolyaDepth::cut_stage(node.depth),
            frac,
            self.config.gamma,
        ))
    }

    /// Restriction prior implied by the current geometry of a restricted node.
    pub fn prior_rho(&self, id: NodeId) -> Option<[f64; 2]> {
        let node = self.tree.node(id);
        if !self.is_restricted(node) {
            return None;
        }
        let (obs, region) = self.log_volumes(id);
        Some(restriction_prior(node.depth - 1, obs, region, self.config.gamma))
    }

    /// `(observed, region)` log volumes from the geometry of `id` and its parent.
    fn log_volumes(&self, id: NodeId) -> (f64, f64) {
        let node = self.tree.node(id);
        let obs = node.bbox.log_volume();
        let Some(p) = node.parent else {
            return (obs, obs);
        };
        let parent = self.tree.node(p);
        let split = parent.split.as_ref().expect("parent is internal");
        let (lo, hi) = (parent.bbox.lower()[split.dim], parent.bbox.upper()[split.dim]);
        let width = if split.left == id { split.loc - lo } else { hi - split.loc };
        let region = parent.bbox.log_volume() - (hi - lo).ln() + width.ln();
        (obs, region)
    }

    /// Recomputes the annotation of `id` from geometry, counts and depth.
    /// Reads the parent's encoding, so parents must be refreshed first.
    /// Returns whether the encoding changed.
    fn refresh(&mut self, id: NodeId) -> bool {
        let gamma = self.config.gamma;
        let (obs, region) = self.log_volumes(id);
        let node = self.tree.node(id);
        let restricted = self.is_restricted(node);
        let kind = match &node.split {
            Some(_) => NodeKind::Internal,
            None if node.bbox.is_full_dimensional() => NodeKind::ObservedTypeII,
            None => NodeKind::ObservedTypeI,
        };
        let chi = node.split.as_ref().map(|s| {
            let [p0, p1] = self.prior_chi(id).expect("internal node");
            [
                p0 + self.tree.node(s.left).count as f64,
                p1 + self.tree.node(s.right).count as f64,
            ]
        });
        let rho = restricted.then(|| {
            let [p_in, p_out] = restriction_prior(node.depth - 1, obs, region, gamma);
            [p_in + node.count as f64, p_out]
        });
        let encoding = match node.parent {
            None => String::new(),
            Some(p) => {
                let parent = self.tree.node(p);
                let mut e = parent.payload.encoding.clone();
                let left = parent.split.as_ref().is_some_and(|s| s.left == id);
                e.push(if left { '0' } else { '1' });
                if restricted {
                    e.push(IN);
                }
                e
            }
        };
        let payload = &mut self.tree.node_mut(id).payload;
        let changed = payload.encoding != encoding;
        *payload = MptParams {
            kind,
            chi,
            rho,
            observed_log_volume: obs,
            region_log_volume: region,
            encoding,
        };
        changed
    }

    fn refresh_subtree(&mut self, id: NodeId) {
        for n in self.tree.preorder_from(id) {
            self.refresh(n);
        }
    }

    /// Refreshes `id` and, if its encoding moved, everything below it.
    fn refresh_node(&mut self, id: NodeId) {
        if self.refresh(id) {
            if let Some((l, r)) = self.tree.children(id) {
                self.refresh_subtree(l);
                self.refresh_subtree(r);
            }
        }
    }

    /// Verifies structure, geometry, stored annotations and point storage.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        self.tree.check_structure(self.config.lifetime)?;
        let mut fresh = self.clone();
        if let Some(root) = fresh.tree.root() {
            fresh.refresh_subtree(root);
        }
        let mut seen = 0;
        for id in self.tree.preorder() {
            let node = self.tree.node(id);
            if node.depth > self.config.max_depth {
                return Err(format!("node {id:?} deeper than max_depth"));
            }
            if node.payload != fresh.tree.node(id).payload {
                return Err(format!("stale annotation at {id:?}"));
            }
            match self.tree.children(id) {
                Some((l, r)) => {
                    if !node.bbox.is_full_dimensional() {
                        return Err(format!("internal node {id:?} has a flat box"));
                    }
                    let mut union = self.tree.node(l).bbox.clone();
                    union.extend(self.tree.node(r).bbox.lower());
                    union.extend(self.tree.node(r).bbox.upper());
                    if union != node.bbox {
                        return Err(format!("box of {id:?} is not the union of its children"));
                    }
                }
                None => {
                    let mut rows = Vec::with_capacity(node.points.len());
                    for &p in &node.points {
                        let x = self.point(p).ok_or(format!("leaf {id:?} holds deleted id {p}"))?;
                        if self.tree.path(x).last() != Some(&id) {
                            return Err(format!("point {p} does not route to its leaf"));
                        }
                        rows.push(x);
                    }
                    let bbox = BoundingBox::of_points(rows).map_err(|e| e.to_string())?;
                    if bbox != node.bbox {
                        return Err(format!("box of leaf {id:?} is not tight"));
                    }
                    seen += node.points.len();
                }
            }
            if node.payload.observed_log_volume > node.payload.region_log_volume {
                return Err(format!("observed box of {id:?} exceeds its region"));
            }
        }
        if seen != self.points.iter().filter(|p| p.is_some()).count() {
            return Err("stored point table disagrees with the leaves".into());
        }
        Ok(())
    }
}

fn leaf_kind(kind: NodeKind) -> LeafKind {
    match kind {
        NodeKind::ObservedTypeII => LeafKind::ObservedTypeII,
        _ => LeafKind::ObservedTypeI,
    }
}

/// Restriction prior for a child of a node at depth `parent_depth`, from log volumes.
fn restriction_prior(parent_depth: usize, log_obs: f64, log_region: f64, gamma: f64) -> [f64; 2] {
    let k = PolyaDepth::restriction_stage(parent_depth).strength(gamma);
    let diff = (log_obs - log_region).min(0.0);
    [k * diff.exp(), k * -diff.exp_m1()]
}

fn complement_log_volume(p: &MptParams) -> f64 {
    let diff = (p.observed_log_volume - p.region_log_volume).min(0.0);
    p.region_log_volume + (-diff.exp_m1()).ln()
}
