//! Random axis-aligned partitions: the data-restricted Mondrian tree and the
//! Mondrian process over a fixed domain.
//!
//! Trees live in an index arena so the streaming model can splice, promote
//! and contract nodes in place. Each node carries a model-specific payload.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::rng::RngState;
use crate::serde_util;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub dim: usize,
    pub loc: f64,
    pub left: NodeId,
    pub right: NodeId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode<P> {
    pub parent: Option<NodeId>,
    pub split: Option<Split>,
    /// Split time; leaves carry the lifetime.
    #[serde(with = "serde_util")]
    pub time: f64,
    /// Data bounding box for Mondrian trees, cell region for Mondrian processes.
    pub bbox: BoundingBox,
    pub depth: usize,
    /// Number of stored points in the subtree.
    pub count: usize,
    /// Point ids, populated on leaves only.
    pub points: Vec<usize>,
    pub payload: P,
}

impl<P> TreeNode<P> {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Lifetime budget; `inf` by default.
    #[serde(with = "serde_util")]
    pub lifetime: f64,
    pub max_depth: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            lifetime: f64::INFINITY,
            max_depth: 10,
            gamma: 1.0,
            seed: 0,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lifetime >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lifetime must be non-negative, got {}",
                self.lifetime
            )));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// A cut supplied in place of random draws: dimension, location and absolute time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedCut {
    pub dim: usize,
    pub loc: f64,
    #[serde(with = "serde_util")]
    pub time: f64,
}

impl ScriptedCut {
    pub fn new(dim: usize, loc: f64, time: f64) -> Self {
        ScriptedCut { dim, loc, time }
    }
}

/// Where cut proposals come from.
///
/// `Scripted` entries are consumed in the order nodes become eligible for a
/// cut (pre-order, left child first). An exhausted script, or an entry whose
/// time is not below the current limit, means "no cut here".
pub enum CutSource<'a> {
    Random(&'a mut RngState),
    Scripted(&'a mut VecDeque<ScriptedCut>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Proposal {
    pub dim: usize,
    pub loc: f64,
    pub time: f64,
}

impl CutSource<'_> {
    /// Proposes a cut for a node whose parent split at `parent_time`.
    ///
    /// The waiting time has rate `Σ weights`; the cut is accepted only when it
    /// lands strictly before `limit`. The dimension is drawn proportional to
    /// `weights` and the location uniformly on `intervals[dim]`.
    pub(crate) fn propose(
        &mut self,
        parent_time: f64,
        limit: f64,
        weights: &[f64],
        intervals: &[(f64, f64)],
    ) -> Result<Option<Proposal>> {
        match self {
            CutSource::Random(rng) => {
                let rate: f64 = weights.iter().filter(|w| **w > 0.0).sum();
                if !(rate > 0.0) {
                    return Ok(None);
                }
                let time = parent_time + rng.exp_draw(rate)?;
                if !(time < limit) {
                    return Ok(None);
                }
                let dim = rng.categorical_proportional(weights)?;
                let (lo, hi) = intervals[dim];
                let loc = rng.uniform_draw(lo, hi)?;
                Ok(Some(Proposal { dim, loc, time }))
            }
            CutSource::Scripted(script) => {
                let Some(cut) = script.pop_front() else {
                    return Ok(None);
                };
                if !(cut.time < limit) {
                    return Ok(None);
                }
                if !(cut.time > parent_time) {
                    return Err(Error::InvalidScript(format!(
                        "cut time {} does not exceed parent time {parent_time}",
                        cut.time
                    )));
                }
                if cut.dim >= weights.len() || !(weights[cut.dim] > 0.0) {
                    return Err(Error::InvalidScript(format!(
                        "dimension {} cannot be cut at this node",
                        cut.dim
                    )));
                }
                let (lo, hi) = intervals[cut.dim];
                if !(lo <= cut.loc && cut.loc <= hi) {
                    return Err(Error::InvalidScript(format!(
                        "cut location {} outside [{lo}, {hi}] in dimension {}",
                        cut.loc, cut.dim
                    )));
                }
                Ok(Some(Proposal {
                    dim: cut.dim,
                    loc: cut.loc,
                    time: cut.time,
                }))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree<P> {
    dim: usize,
    nodes: Vec<Option<TreeNode<P>>>,
    free: Vec<usize>,
    root: Option<NodeId>,
}

impl<P> Tree<P> {
    pub fn empty(dim: usize) -> Self {
        Tree {
            dim,
            nodes: Vec::new(),
            free: Vec::new(),
            root: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub(crate) fn set_root(&mut self, root: Option<NodeId>) {
        self.root = root;
    }

    pub fn node(&self, id: NodeId) -> &TreeNode<P> {
        self.nodes[id.0].as_ref().expect("dangling node id")
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut TreeNode<P> {
        self.nodes[id.0].as_mut().expect("dangling node id")
    }

    /// Whether `id` refers to a live node.
    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.get(id.0).is_some_and(|n| n.is_some())
    }

    pub fn len(&self) -> usize {
        self.nodes.len() - self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub(crate) fn alloc(&mut self, node: TreeNode<P>) -> NodeId {
        match self.free.pop() {
            Some(slot) => {
                self.nodes[slot] = Some(node);
                NodeId(slot)
            }
            None => {
                self.nodes.push(Some(node));
                NodeId(self.nodes.len() - 1)
            }
        }
    }

    pub(crate) fn release(&mut self, id: NodeId) -> TreeNode<P> {
        let node = self.nodes[id.0].take().expect("double release");
        self.free.push(id.0);
        node
    }

    pub fn children(&self, id: NodeId) -> Option<(NodeId, NodeId)> {
        self.node(id).split.as_ref().map(|s| (s.left, s.right))
    }

    pub fn sibling(&self, id: NodeId) -> Option<NodeId> {
        let parent = self.node(id).parent?;
        let (l, r) = self.children(parent)?;
        Some(if l == id { r } else { l })
    }

    /// Pre-order traversal, left child first.
    pub fn preorder(&self) -> Vec<NodeId> {
        self.root.map(|r| self.preorder_from(r)).unwrap_or_default()
    }

    pub fn preorder_from(&self, start: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some((l, r)) = self.children(id) {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|id| self.node(*id).is_leaf())
            .collect()
    }

    /// Child of `id` on the side of its cut that `x` falls on.
    pub fn route(&self, id: NodeId, x: &[f64]) -> Option<NodeId> {
        self.node(id)
            .split
            .as_ref()
            .map(|s| if x[s.dim] <= s.loc { s.left } else { s.right })
    }

    /// Root-to-leaf path followed by `x` through the cuts alone.
    pub fn path(&self, x: &[f64]) -> Vec<NodeId> {
        let mut path = Vec::new();
        let mut cur = self.root;
        while let Some(id) = cur {
            path.push(id);
            cur = self.route(id, x);
        }
        path
    }

    pub fn subtree_points(&self, id: NodeId) -> Vec<usize> {
        self.preorder_from(id)
            .into_iter()
            .flat_map(|n| self.node(n).points.iter().copied())
            .collect()
    }

    /// Longest distance from `id` down to a leaf.
    pub fn height(&self, id: NodeId) -> usize {
        let base = self.node(id).depth;
        self.preorder_from(id)
            .into_iter()
            .map(|n| self.node(n).depth - base)
            .max()
            .unwrap_or(0)
    }

    pub fn max_depth(&self) -> usize {
        self.preorder()
            .into_iter()
            .map(|n| self.node(n).depth)
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn reset_depths(&mut self, start: NodeId, depth: usize) {
        let mut stack = vec![(start, depth)];
        while let Some((id, d)) = stack.pop() {
            self.node_mut(id).depth = d;
            if let Some((l, r)) = self.children(id) {
                stack.push((l, d + 1));
                stack.push((r, d + 1));
            }
        }
    }

    /// Replace `old` by `new` in its parent's child slot (or as the root).
    pub(crate) fn replace_child(&mut self, parent: Option<NodeId>, old: NodeId, new: NodeId) {
        match parent {
            None => self.root = Some(new),
            Some(p) => {
                let split = self.node_mut(p).split.as_mut().expect("parent is a leaf");
                if split.left == old {
                    split.left = new;
                } else {
                    split.right = new;
                }
            }
        }
        self.node_mut(new).parent = parent;
    }

    /// Converts payloads node by node, keeping the arena layout.
    pub fn map_payload<Q>(self, mut f: impl FnMut(&TreeNode<P>) -> Q) -> Tree<Q> {
        let nodes = self
            .nodes
            .into_iter()
            .map(|slot| {
                slot.map(|n| {
                    let payload = f(&n);
                    TreeNode {
                        parent: n.parent,
                        split: n.split,
                        time: n.time,
                        bbox: n.bbox,
                        depth: n.depth,
                        count: n.count,
                        points: n.points,
                        payload,
                    }
                })
            })
            .collect();
        Tree {
            dim: self.dim,
            nodes,
            free: self.free,
            root: self.root,
        }
    }

    /// Structural invariants shared by both tree kinds: parent links, depths,
    /// strictly increasing times bounded by the lifetime, cuts inside their
    /// boxes, nested child boxes and consistent counts.
    pub fn check_structure(&self, lifetime: f64) -> std::result::Result<(), String> {
        let Some(root) = self.root else {
            return Ok(());
        };
        if self.node(root).parent.is_some() || self.node(root).depth != 0 {
            return Err("root has a parent or non-zero depth".into());
        }
        for id in self.preorder() {
            let node = self.node(id);
            if node.time > lifetime {
                return Err(format!("node {id:?} time {} exceeds lifetime", node.time));
            }
            match &node.split {
                None => {
                    if node.count != node.points.len() {
                        return Err(format!("leaf {id:?} count mismatch"));
                    }
                }
                Some(s) => {
                    if !node.points.is_empty() {
                        return Err(format!("internal node {id:?} stores points"));
                    }
                    if !(node.bbox.lower()[s.dim] <= s.loc && s.loc <= node.bbox.upper()[s.dim]) {
                        return Err(format!("cut of {id:?} lies outside its box"));
                    }
                    let mut total = 0;
                    for c in [s.left, s.right] {
                        let child = self.node(c);
                        if child.parent != Some(id) {
                            return Err(format!("child {c:?} has wrong parent link"));
                        }
                        if child.depth != node.depth + 1 {
                            return Err(format!("child {c:?} has wrong depth"));
                        }
                        if !(child.time > node.time) {
                            return Err(format!("time does not increase into {c:?}"));
                        }
                        if !node.bbox.contains_box(&child.bbox) {
                            return Err(format!("child {c:?} box escapes its parent"));
                        }
                        total += child.count;
                    }
                    if total != node.count {
                        return Err(format!("counts of {id:?} do not add up"));
                    }
                    let (l, r) = (self.node(s.left), self.node(s.right));
                    // right cells of a Mondrian process start exactly at the cut
                    if l.bbox.upper()[s.dim] > s.loc || r.bbox.lower()[s.dim] < s.loc {
                        return Err(format!("children of {id:?} straddle the cut"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn leaf<P: Default>(parent: Option<NodeId>, bbox: BoundingBox, depth: usize, time: f64) -> TreeNode<P> {
    TreeNode {
        parent,
        split: None,
        time,
        bbox,
        depth,
        count: 0,
        points: Vec::new(),
        payload: P::default(),
    }
}

fn check_data(data: &Matrix) -> Result<()> {
    if data.is_empty() || data.n_cols() == 0 {
        return Err(Error::EmptyInput);
    }
    data.check_finite()
}

/// Samples a Mondrian tree restricted to the bounding boxes of `data`.
///
/// A node stops splitting when it holds fewer than two points, has a flat
/// box, sits at `max_depth`, or its next split time reaches the lifetime.
pub fn sample_mondrian_tree(
    data: &Matrix,
    cfg: &TreeConfig,
    source: &mut CutSource<'_>,
) -> Result<Tree<()>> {
    check_data(data)?;
    cfg.validate()?;
    let all: Vec<usize> = (0..data.n_rows()).collect();
    build_mondrian_tree(data, all, cfg, source)
}

pub(crate) fn build_mondrian_tree<P: Default>(
    data: &Matrix,
    ids: Vec<usize>,
    cfg: &TreeConfig,
    source: &mut CutSource<'_>,
) -> Result<Tree<P>> {
    let mut tree = Tree::empty(data.n_cols());
    let bbox = BoundingBox::of_points(ids.iter().map(|&i| data.row(i)))?;
    let root = tree.alloc(leaf(None, bbox, 0, cfg.lifetime));
    tree.root = Some(root);
    let mut stack = vec![(root, ids, 0.0)];
    while let Some((id, ids, parent_time)) = stack.pop() {
        let (depth, bbox) = {
            let n = tree.node(id);
            (n.depth, n.bbox.clone())
        };
        tree.node_mut(id).count = ids.len();
        let eligible = ids.len() >= 2 && depth < cfg.max_depth && bbox.is_full_dimensional();
        let proposal = if eligible {
            let intervals: Vec<(f64, f64)> = bbox
                .lower()
                .iter()
                .zip(bbox.upper())
                .map(|(l, u)| (*l, *u))
                .collect();
            source.propose(parent_time, cfg.lifetime, &bbox.sides(), &intervals)?
        } else {
            None
        };
        let Some(cut) = proposal else {
            let node = tree.node_mut(id);
            node.time = cfg.lifetime;
            node.points = ids;
            continue;
        };
        let (left_ids, right_ids): (Vec<usize>, Vec<usize>) =
            ids.iter().partition(|&&i| data.row(i)[cut.dim] <= cut.loc);
        if left_ids.is_empty() || right_ids.is_empty() {
            return Err(Error::InvalidScript(format!(
                "cut at {} in dimension {} does not separate the node's data",
                cut.loc, cut.dim
            )));
        }
        let left_box = BoundingBox::of_points(left_ids.iter().map(|&i| data.row(i)))?;
        let right_box = BoundingBox::of_points(right_ids.iter().map(|&i| data.row(i)))?;
        let left = tree.alloc(leaf(Some(id), left_box, depth + 1, cfg.lifetime));
        let right = tree.alloc(leaf(Some(id), right_box, depth + 1, cfg.lifetime));
        let node = tree.node_mut(id);
        node.time = cut.time;
        node.split = Some(Split {
            dim: cut.dim,
            loc: cut.loc,
            left,
            right,
        });
        stack.push((right, right_ids, cut.time));
        stack.push((left, left_ids, cut.time));
    }
    Ok(tree)
}

/// Samples a Mondrian process on `domain`, cutting whole cells rather than
/// data boxes, and routes `data` into the resulting cells.
///
/// Recursion is bounded by `max_depth` and the lifetime only; empty cells
/// keep splitting.
pub fn sample_mondrian_process(
    domain: &BoundingBox,
    data: &Matrix,
    cfg: &TreeConfig,
    source: &mut CutSource<'_>,
) -> Result<Tree<()>> {
    cfg.validate()?;
    if data.n_cols() != domain.dim() && !data.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: data.n_cols(),
        });
    }
    data.check_finite()?;
    if data.rows().any(|r| !domain.contains(r)) {
        return Err(Error::OutOfDomain);
    }
    build_mondrian_process(domain, data, cfg, source)
}

pub(crate) fn build_mondrian_process<P: Default>(
    domain: &BoundingBox,
    data: &Matrix,
    cfg: &TreeConfig,
    source: &mut CutSource<'_>,
) -> Result<Tree<P>> {
    let mut tree = Tree::empty(domain.dim());
    let root = tree.alloc(leaf(None, domain.clone(), 0, cfg.lifetime));
    tree.root = Some(root);
    let mut stack = vec![(root, (0..data.n_rows()).collect::<Vec<_>>(), 0.0)];
    while let Some((id, ids, parent_time)) = stack.pop() {
        let (depth, region) = {
            let n = tree.node(id);
            (n.depth, n.bbox.clone())
        };
        tree.node_mut(id).count = ids.len();
        let proposal = if depth < cfg.max_depth {
            let intervals: Vec<(f64, f64)> = region
                .lower()
                .iter()
                .zip(region.upper())
                .map(|(l, u)| (*l, *u))
                .collect();
            source.propose(parent_time, cfg.lifetime, &region.sides(), &intervals)?
        } else {
            None
        };
        let Some(cut) = proposal else {
            let node = tree.node_mut(id);
            node.time = cfg.lifetime;
            node.points = ids;
            continue;
        };
        let (left_ids, right_ids): (Vec<usize>, Vec<usize>) =
            ids.iter().partition(|&&i| data.row(i)[cut.dim] <= cut.loc);
        let (left_region, right_region) = region.split(cut.dim, cut.loc);
        let left = tree.alloc(leaf(Some(id), left_region, depth + 1, cfg.lifetime));
        let right = tree.alloc(leaf(Some(id), right_region, depth + 1, cfg.lifetime));
        let node = tree.node_mut(id);
        node.time = cut.time;
        node.split = Some(Split {
            dim: cut.dim,
            loc: cut.loc,
            left,
            right,
        });
        stack.push((right, right_ids, cut.time));
        stack.push((left, left_ids, cut.time));
    }
    Ok(tree)
}
