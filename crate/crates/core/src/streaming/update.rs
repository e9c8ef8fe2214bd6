//! Online insertion and deletion.

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::mondrian::{CutSource, NodeId, Split, TreeNode};
use crate::rng::RngState;

use super::{MpTree, MptParams};

/// Maps a split time to the time of equal waiting-time quantile after the
/// node's linear dimension shrinks from `l_old` to `l_new`.
pub fn rescale_time(parent_time: f64, time: f64, l_old: f64, l_new: f64) -> f64 {
    parent_time + (l_old / l_new) * (time - parent_time)
}

fn union(a: &BoundingBox, b: &BoundingBox) -> BoundingBox {
    let mut u = a.clone();
    u.extend(b.lower());
    u.extend(b.upper());
    u
}

impl MpTree {
    /// Adds `z` using the tree's own random stream and returns its id.
    pub fn insert(&mut self, z: &[f64]) -> Result<usize> {
        let mut rng = std::mem::replace(&mut self.rng, RngState::new(0));
        let result = self.insert_with(z, &mut CutSource::Random(&mut rng));
        self.rng = rng;
        result
    }

    /// Adds `z`, drawing any new cut from `source`.
    ///
    /// Walking down from the root, a new parent is spliced above node `j`
    /// when a cut of the extension between `B_j` and `z` arrives before `j`'s
    /// own split time. The splice is skipped when the enlarged box would be
    /// flat or the subtree would grow past `max_depth`; `z` then extends the
    /// box and descends.
    pub fn insert_with(&mut self, z: &[f64], source: &mut CutSource<'_>) -> Result<usize> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("inserted point is not finite".into()));
        }
        let id = self.points.len();
        let Some(root) = self.tree.root() else {
            self.points.push(Some(z.to_vec()));
            let leaf = self.tree.alloc(TreeNode {
                parent: None,
                split: None,
                time: self.config.lifetime,
                bbox: BoundingBox::point(z),
                depth: 0,
                count: 1,
                points: vec![id],
                payload: MptParams::default(),
            });
            self.tree.set_root(Some(leaf));
            self.refresh(leaf);
            return Ok(id);
        };

        // Proposals are validated before anything is modified.
        let mut path = Vec::new();
        let mut cur = root;
        let mut parent_time = 0.0;
        let mut splice = None;
        loop {
            let node = self.tree.node(cur);
            let (below, above) = node.bbox.extension(z);
            let weights: Vec<f64> = below.iter().zip(&above).map(|(b, a)| b + a).collect();
            if weights.iter().any(|w| *w > 0.0) {
                let intervals: Vec<(f64, f64)> = (0..z.len())
                    .map(|d| {
                        if above[d] > 0.0 {
                            (node.bbox.upper()[d], z[d])
                        } else {
                            (z[d], node.bbox.lower()[d])
                        }
                    })
                    .collect();
                if let Some(cut) = source.propose(parent_time, node.time, &weights, &intervals)? {
                    let mut grown = node.bbox.clone();
                    grown.extend(z);
                    let fits = node.depth + 1 + self.tree.height(cur) <= self.config.max_depth;
                    if grown.is_full_dimensional() && fits {
                        let z_left = z[cut.dim] <= cut.loc;
                        let separates = if z_left {
                            node.bbox.lower()[cut.dim] > cut.loc
                        } else {
                            node.bbox.upper()[cut.dim] <= cut.loc
                        };
                        if !separates {
                            return Err(Error::InvalidScript(format!(
                                "cut at {} in dimension {} does not separate the new point",
                                cut.loc, cut.dim
                            )));
                        }
                        splice = Some((cut, grown, z_left));
                        break;
                    }
                }
            }
            path.push(cur);
            match self.tree.route(cur, z) {
                Some(next) => {
                    parent_time = node.time;
                    cur = next;
                }
                None => break,
            }
        }

        self.points.push(Some(z.to_vec()));
        for &n in &path {
            let node = self.tree.node_mut(n);
            node.bbox.extend(z);
            node.count += 1;
        }
        let mut fresh = Vec::new();
        match splice {
            None => {
                let leaf = *path.last().expect("path reaches a leaf");
                self.tree.node_mut(leaf).points.push(id);
            }
            Some((cut, grown, z_left)) => {
                let j = cur;
                let (parent, depth, count) = {
                    let n = self.tree.node(j);
                    (n.parent, n.depth, n.count)
                };
                let sibling = self.tree.alloc(TreeNode {
                    parent: None,
                    split: None,
                    time: self.config.lifetime,
                    bbox: BoundingBox::point(z),
                    depth: depth + 1,
                    count: 1,
                    points: vec![id],
                    payload: MptParams::default(),
                });
                let (left, right) = if z_left { (sibling, j) } else { (j, sibling) };
                let spliced = self.tree.alloc(TreeNode {
                    parent,
                    split: Some(Split {
                        dim: cut.dim,
                        loc: cut.loc,
                        left,
                        right,
                    }),
                    time: cut.time,
                    bbox: grown,
                    depth,
                    count: count + 1,
                    points: Vec::new(),
                    payload: MptParams::default(),
                });
                self.tree.replace_child(parent, j, spliced);
                self.tree.node_mut(j).parent = Some(spliced);
                self.tree.node_mut(sibling).parent = Some(spliced);
                self.tree.reset_depths(spliced, depth);
                fresh.push(spliced);
            }
        }
        self.refresh_touched(&path, &fresh);
        Ok(id)
    }

    /// Removes the point with id `id`.
    ///
    /// Boxes on its path shrink to their remaining points. A node whose box
    /// shrank keeps the quantile of its waiting time, so its split time moves
    /// later; subtrees hanging off the path keep their own waiting times and
    /// shift with it. Nodes pushed to the lifetime, or left with a flat box,
    /// are contracted into leaves. An emptied leaf is removed together with
    /// its parent and the sibling takes the parent's place.
    pub fn delete(&mut self, id: usize) -> Result<()> {
        let z = self.point(id).ok_or(Error::NotFound(id))?.to_vec();
        let mut path = self.tree.path(&z);
        let leaf = *path.last().ok_or(Error::NotFound(id))?;
        let pos = self
            .tree
            .node(leaf)
            .points
            .iter()
            .position(|p| *p == id)
            .ok_or(Error::NotFound(id))?;
        self.tree.node_mut(leaf).points.remove(pos);
        self.points[id] = None;

        let lifetime = self.config.lifetime;
        let old_times: Vec<f64> = path.iter().map(|n| self.tree.node(*n).time).collect();
        let old_lengths: Vec<f64> = path
            .iter()
            .map(|n| self.tree.node(*n).bbox.linear_dimension())
            .collect();
        for &n in &path {
            self.tree.node_mut(n).count -= 1;
        }

        let mut fresh = Vec::new();
        if self.tree.node(leaf).count == 0 {
            path.pop();
            self.tree.release(leaf);
            match path.pop() {
                None => self.tree.set_root(None),
                Some(parent) => {
                    let removed = self.tree.release(parent);
                    let split = removed.split.expect("parent of a leaf is internal");
                    let sibling = if split.left == leaf { split.right } else { split.left };
                    self.tree.replace_child(removed.parent, parent, sibling);
                    self.tree.reset_depths(sibling, removed.depth);
                    fresh.push(sibling);
                }
            }
        }

        for &n in path.iter().rev() {
            let bbox = match self.tree.children(n) {
                Some((l, r)) => union(&self.tree.node(l).bbox, &self.tree.node(r).bbox),
                None => {
                    let node = self.tree.node(n);
                    BoundingBox::of_points(node.points.iter().map(|p| self.point(*p).expect("stored point")))?
                }
            };
            self.tree.node_mut(n).bbox = bbox;
        }

        let (mut parent_old, mut parent_new) = (0.0, 0.0);
        for i in 0..path.len() {
            let j = path[i];
            if self.tree.node(j).is_leaf() {
                break;
            }
            let tau_old = old_times[i];
            let l_new = self.tree.node(j).bbox.linear_dimension();
            let tau_new = if parent_new == parent_old && l_new == old_lengths[i] {
                tau_old
            } else {
                rescale_time(parent_old, tau_old, old_lengths[i], l_new) + (parent_new - parent_old)
            };
            if !(tau_new < lifetime) || !self.tree.node(j).bbox.is_full_dimensional() {
                self.contract(j);
                fresh.push(j);
                path.truncate(i + 1);
                break;
            }
            self.tree.node_mut(j).time = tau_new;
            let (l, r) = self.tree.children(j).expect("internal node");
            let delta = tau_new - tau_old;
            for c in [l, r] {
                if path.get(i + 1) != Some(&c) {
                    self.shift_times(c, delta, &mut fresh);
                }
            }
            parent_old = tau_old;
            parent_new = tau_new;
        }

        fresh.retain(|n| self.tree.contains(*n));
        self.refresh_touched(&path, &fresh);
        Ok(())
    }

    /// Shifts split times under `start` by `delta`, contracting nodes that
    /// reach the lifetime.
    fn shift_times(&mut self, start: NodeId, delta: f64, contracted: &mut Vec<NodeId>) {
        if delta == 0.0 {
            return;
        }
        let lifetime = self.config.lifetime;
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            let Some((l, r)) = self.tree.children(n) else {
                continue;
            };
            let t = self.tree.node(n).time + delta;
            if t < lifetime {
                self.tree.node_mut(n).time = t;
                stack.push(l);
                stack.push(r);
            } else {
                self.contract(n);
                contracted.push(n);
            }
        }
    }

    /// Turns `id` into a leaf holding every point of its subtree.
    fn contract(&mut self, id: NodeId) {
        let points = self.tree.subtree_points(id);
        let below: Vec<NodeId> = self.tree.preorder_from(id).into_iter().skip(1).collect();
        for n in below {
            self.tree.release(n);
        }
        let lifetime = self.config.lifetime;
        let node = self.tree.node_mut(id);
        node.split = None;
        node.time = lifetime;
        node.points = points;
    }

    /// Refreshes path nodes top-down with their children, then whole subtrees
    /// whose structure changed.
    fn refresh_touched(&mut self, path: &[NodeId], subtrees: &[NodeId]) {
        for &n in path {
            self.refresh_node(n);
            if let Some((l, r)) = self.tree.children(n) {
                self.refresh_node(l);
                self.refresh_node(r);
            }
        }
        for &s in subtrees {
            self.refresh_subtree(s);
        }
    }
}
