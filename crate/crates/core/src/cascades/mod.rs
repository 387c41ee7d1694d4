//! Cascade configuration and the forward diffusion process.

mod activation;
mod diffusion;

pub use activation::{ActivationRule, ActivationSpec, ActivationTable, Offer};
pub use diffusion::{diffuse, estimate_influence, DiffusionState, InfluenceEstimate};
pub(crate) use diffusion::{Network, Simulator};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};

/// Cascade identifier. The new cascade is always `Cascade(0)`; existing
/// cascades are numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cascade(pub u16);

impl Cascade {
    pub const NEW: Cascade = Cascade(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_new(self) -> bool {
        self == Cascade::NEW
    }
}

/// Existing cascades with their seed sets, the candidate set for the new
/// cascade and the activation functions.
#[derive(Clone, Debug)]
pub struct CascadeConfig {
    names: Vec<String>,
    seeds: Vec<Vec<NodeId>>,
    seeded_by_offsets: Vec<usize>,
    seeded_by: Vec<Cascade>,
    candidates: Vec<NodeId>,
    candidate_mask: Vec<bool>,
    activation: ActivationSpec,
}

pub const NEW_CASCADE_NAME: &str = "c_new";

impl CascadeConfig {
    /// `existing` lists `(name, seed set)` of each existing cascade, which
    /// become `Cascade(1)`, `Cascade(2)`, ... in order. `candidates = None`
    /// means every node is a candidate.
    pub fn new(
        g: &DirectedGraph,
        existing: Vec<(String, Vec<NodeId>)>,
        candidates: Option<Vec<NodeId>>,
        activation: ActivationSpec,
    ) -> Result<Self> {
        let n = g.node_count();
        let mut names = vec![NEW_CASCADE_NAME.to_string()];
        let mut seeds = vec![Vec::new()];
        for (name, mut s) in existing {
            if names.contains(&name) {
                return Err(Error::InvalidConfig(format!("duplicate cascade name {name:?}")));
            }
            if let Some(&bad) = s.iter().find(|&&v| v as usize >= n) {
                return Err(Error::InvalidConfig(format!("seed {bad} of {name:?} is not a node")));
            }
            s.sort_unstable();
            s.dedup();
            names.push(name);
            seeds.push(s);
        }
        if activation.num_cascades() < names.len() {
            return Err(Error::InvalidConfig(format!(
                "activation covers {} cascades, configuration has {}",
                activation.num_cascades(),
                names.len()
            )));
        }
        if activation.node_count() != n || !activation.covers_edges(g.edge_count()) {
            return Err(Error::InvalidConfig("activation spec was built for a different graph".into()));
        }
        let mut candidates = match candidates {
            Some(c) => c,
            None => (0..n as NodeId).collect(),
        };
        candidates.sort_unstable();
        candidates.dedup();
        if let Some(&bad) = candidates.iter().find(|&&v| v as usize >= n) {
            return Err(Error::InvalidConfig(format!("candidate {bad} is not a node")));
        }
        let mut candidate_mask = vec![false; n];
        for &v in &candidates {
            candidate_mask[v as usize] = true;
        }

        let mut seeded_by_offsets = vec![0usize; n + 1];
        for s in &seeds {
            for &v in s {
                seeded_by_offsets[v as usize + 1] += 1;
            }
        }
        for i in 0..n {
            seeded_by_offsets[i + 1] += seeded_by_offsets[i];
        }
        let mut fill = seeded_by_offsets.clone();
        let mut seeded_by = vec![Cascade::NEW; seeded_by_offsets[n]];
        for (c, s) in seeds.iter().enumerate() {
            for &v in s {
                seeded_by[fill[v as usize]] = Cascade(c as u16);
                fill[v as usize] += 1;
            }
        }
        Ok(CascadeConfig { names, seeds, seeded_by_offsets, seeded_by, candidates, candidate_mask, activation })
    }

    /// Same candidates and activation functions with no existing cascades.
    pub fn without_existing(&self) -> Self {
        let n = self.candidate_mask.len();
        CascadeConfig {
            names: vec![NEW_CASCADE_NAME.to_string()],
            seeds: vec![Vec::new()],
            seeded_by_offsets: vec![0; n + 1],
            seeded_by: Vec::new(),
            candidates: self.candidates.clone(),
            candidate_mask: self.candidate_mask.clone(),
            activation: self.activation.clone(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.candidate_mask.len()
    }

    /// Number of existing cascades `L`.
    pub fn existing_count(&self) -> usize {
        self.names.len() - 1
    }

    pub fn cascade_name(&self, c: Cascade) -> &str {
        &self.names[c.index()]
    }

    pub fn cascade_by_name(&self, name: &str) -> Option<Cascade> {
        self.names.iter().position(|n| n == name).map(|i| Cascade(i as u16))
    }

    /// Seed set of an existing cascade.
    pub fn seeds(&self, c: Cascade) -> &[NodeId] {
        &self.seeds[c.index()]
    }

    /// Existing cascades that seed `v`, ascending.
    pub fn existing_seeds_of(&self, v: NodeId) -> &[Cascade] {
        &self.seeded_by[self.seeded_by_offsets[v as usize]..self.seeded_by_offsets[v as usize + 1]]
    }

    pub fn is_existing_seed(&self, v: NodeId) -> bool {
        self.seeded_by_offsets[v as usize] != self.seeded_by_offsets[v as usize + 1]
    }

    pub fn candidates(&self) -> &[NodeId] {
        &self.candidates
    }

    pub fn is_candidate(&self, v: NodeId) -> bool {
        self.candidate_mask.get(v as usize).copied().unwrap_or(false)
    }

    pub fn activation(&self) -> &ActivationSpec {
        &self.activation
    }

    pub(crate) fn check_seeds(&self, seeds: &[NodeId]) -> Result<()> {
        match seeds.iter().find(|&&v| !self.is_candidate(v)) {
            Some(&v) => Err(Error::SeedNotCandidate(v)),
            None => Ok(()),
        }
    }
}
