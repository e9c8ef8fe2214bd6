//! Mondrian Pólya forests: batch and streaming nonparametric density
//! estimators over random axis-aligned partitions, with probability-mass
//! anomaly scores and online insertion and deletion.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod eval;
pub mod forest;
pub mod geometry;
pub mod mondrian;
pub mod oplog;
pub mod polya;
pub mod rng;
mod serde_util;
pub mod streaming;

pub use data::{Dataset, Matrix};
pub use error::{Error, Result};
pub use geometry::BoundingBox;
pub use mondrian::{
    sample_mondrian_process, sample_mondrian_tree, CutSource, NodeId, ScriptedCut, Split, Tree,
    TreeConfig, TreeNode,
};
pub use polya::{beta_mean, fit_bmpt, polya_prior, BatchTree, PolyaDepth, PolyaNodeParams};
pub use rng::RngState;
pub use streaming::{LeafHit, LeafInfo, LeafKind, MpTree, MptParams, NodeKind};
pub use forest::{Forest, ModelKind, ScoreReport, Trees};
