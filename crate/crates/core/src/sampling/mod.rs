//! Reverse sandwich sampling.
//!
//! An RR-tuple is grown backwards from a root along in-edges, flipping each
//! edge's coin once, until a layer contains a seed of an existing cascade or
//! nothing new is reached. Meeting its lower set guarantees the root is won
//! by the new cascade in the tuple's induced instance; meeting its upper set
//! is necessary for that. Averaged over random roots the three indicators
//! give the estimators `G_lower <= G <= G_upper` of the expected influence.

mod collection;
mod eval;
mod tuple;

pub use collection::{CoverageIndex, TupleCollection};
pub use eval::{eval_g, eval_lower, eval_upper, TupleEvaluator};
pub use tuple::{generate_rr_tuple, generate_rr_tuple_of, RRTuple, SamplerFault};

use crate::graph::NodeId;

/// Which per-tuple indicator an estimate averages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EstimateKind {
    /// Outcome in the tuple's induced instance (unbiased).
    Exact,
    Upper,
    Lower,
}

pub trait Membership {
    fn contains(&self, v: NodeId) -> bool;
}

/// A seed set with O(1) membership.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedSet {
    nodes: Vec<NodeId>,
    mask: Vec<bool>,
}

impl SeedSet {
    pub fn new(n: usize, nodes: &[NodeId]) -> Self {
        let mut mask = vec![false; n];
        let mut list = Vec::with_capacity(nodes.len());
        for &v in nodes {
            if !std::mem::replace(&mut mask[v as usize], true) {
                list.push(v);
            }
        }
        SeedSet { nodes: list, mask }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn insert(&mut self, v: NodeId) {
        if !std::mem::replace(&mut self.mask[v as usize], true) {
            self.nodes.push(v);
        }
    }

    /// The set plus one extra node, without copying.
    pub fn with(&self, extra: NodeId) -> WithExtra<'_> {
        WithExtra { base: self, extra }
    }
}

pub struct WithExtra<'a> {
    base: &'a SeedSet,
    extra: NodeId,
}

impl Membership for WithExtra<'_> {
    fn contains(&self, v: NodeId) -> bool {
        v == self.extra || self.base.mask[v as usize]
    }
}
