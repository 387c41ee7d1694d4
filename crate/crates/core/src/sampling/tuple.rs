use rand::{Rng, RngCore};

use crate::cascades::CascadeConfig;
use crate::graph::{DirectedGraph, EdgeId, NodeId};

/// One reverse sandwich sample rooted at `root`.
///
/// `nodes` lists the visited nodes layer by layer, starting with the root;
/// it is the upper set and the node set of the sampled subgraph. The lower
/// set is the prefix `nodes[..lower_len]`: every layer except the one that
/// reached a seed of an existing cascade, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RRTuple {
    pub(crate) root: NodeId,
    pub(crate) nodes: Vec<NodeId>,
    pub(crate) layer_starts: Vec<usize>,
    pub(crate) lower_len: usize,
    /// `(source, target, edge id)` with local endpoints, sorted by source.
    pub(crate) edges: Vec<(u32, u32, EdgeId)>,
    pub(crate) out_offsets: Vec<usize>,
    pub(crate) hit_existing: bool,
    pub(crate) activation_seed: u64,
    pub(crate) edges_tested: u64,
}

impl RRTuple {
    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Upper set: every node of the sampled subgraph.
    pub fn upper(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn lower(&self) -> &[NodeId] {
        &self.nodes[..self.lower_len]
    }

    /// `(source, target)` pairs of the sampled subgraph in original direction.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().map(|&(s, t, _)| (self.nodes[s as usize], self.nodes[t as usize]))
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.iter().map(|e| e.2)
    }

    /// Node layers in BFS order, the root alone in layer 0.
    pub fn layers(&self) -> impl Iterator<Item = &[NodeId]> + '_ {
        self.layer_starts.iter().enumerate().map(move |(i, &s)| {
            let e = self.layer_starts.get(i + 1).copied().unwrap_or(self.nodes.len());
            &self.nodes[s..e]
        })
    }

    /// Whether the search stopped at a seed of an existing cascade.
    pub fn hit_existing(&self) -> bool {
        self.hit_existing
    }

    pub fn activation_seed(&self) -> u64 {
        self.activation_seed
    }

    /// Number of edge tests performed while sampling.
    pub fn edges_tested(&self) -> u64 {
        self.edges_tested
    }
}

/// Test hook: deliberately broken sampling used to check that validation
/// detects a biased sampler.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SamplerFault {
    #[default]
    None,
    /// Every tuple is rooted at node 0.
    FixedRoot,
}

/// Reverse sampler with reusable, epoch-stamped visit marks.
pub(crate) struct TupleSampler<'a> {
    g: &'a DirectedGraph,
    cfg: &'a CascadeConfig,
    stamp: Vec<u32>,
    local: Vec<u32>,
    epoch: u32,
    pub(crate) fault: SamplerFault,
}

pub(crate) struct Sample {
    pub nodes: Vec<NodeId>,
    pub layer_starts: Vec<usize>,
    pub lower_len: usize,
    pub edges: Vec<(u32, u32, EdgeId)>,
    pub hit_existing: bool,
    pub edges_tested: u64,
}

impl<'a> TupleSampler<'a> {
    pub fn new(g: &'a DirectedGraph, cfg: &'a CascadeConfig) -> Self {
        let n = g.node_count();
        TupleSampler { g, cfg, stamp: vec![0; n], local: vec![0; n], epoch: 0, fault: SamplerFault::None }
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    /// Reverse BFS with coin flips from `v`, stopping at the first layer
    /// containing an existing seed. Each edge into a current-layer node whose
    /// source was not yet visited before this layer is tested exactly once.
    pub fn sample_into(&mut self, v: NodeId, rng: &mut impl RngCore, record_edges: bool, nodes: &mut Vec<NodeId>) -> SampleMeta {
        self.next_epoch();
        let epoch = self.epoch;
        let base = nodes.len();
        nodes.push(v);
        self.stamp[v as usize] = epoch;
        self.local[v as usize] = 0;
        let mut meta = SampleMeta { layer_starts: vec![0], lower_len: 0, edges: Vec::new(), hit_existing: false, edges_tested: 0 };
        let mut layer = 0usize;
        loop {
            let end = nodes.len() - base;
            if layer == end {
                meta.lower_len = end;
                meta.layer_starts.pop();
                return meta;
            }
            if nodes[base + layer..].iter().any(|&u| self.cfg.is_existing_seed(u)) {
                meta.lower_len = layer;
                meta.hit_existing = true;
                return meta;
            }
            for idx in layer..end {
                let target = nodes[base + idx];
                for (source, e, p) in self.g.in_edges(target) {
                    let s = source as usize;
                    if self.stamp[s] == epoch && (self.local[s] as usize) < end {
                        continue;
                    }
                    meta.edges_tested += 1;
                    if rng.random::<f64>() < p {
                        if self.stamp[s] != epoch {
                            self.stamp[s] = epoch;
                            self.local[s] = (nodes.len() - base) as u32;
                            nodes.push(source);
                        }
                        if record_edges {
                            meta.edges.push((self.local[s], idx as u32, e));
                        }
                    }
                }
            }
            layer = end;
            meta.layer_starts.push(end);
        }
    }

    pub fn sample(&mut self, v: NodeId, rng: &mut impl RngCore, record_edges: bool) -> Sample {
        let mut nodes = Vec::new();
        let m = self.sample_into(v, rng, record_edges, &mut nodes);
        Sample {
            nodes,
            layer_starts: m.layer_starts,
            lower_len: m.lower_len,
            edges: m.edges,
            hit_existing: m.hit_existing,
            edges_tested: m.edges_tested,
        }
    }

    pub fn pick_root(&self, rng: &mut impl RngCore) -> NodeId {
        let root = rng.random_range(0..self.g.node_count() as NodeId);
        match self.fault {
            SamplerFault::None => root,
            SamplerFault::FixedRoot => 0,
        }
    }

    /// Full tuple rooted at `v`. Draw order: activation seed, then edge tests.
    pub fn tuple_of(&mut self, v: NodeId, rng: &mut impl RngCore) -> RRTuple {
        let activation_seed = rng.next_u64();
        let s = self.sample(v, rng, true);
        build_tuple(v, s, activation_seed)
    }

    /// Full tuple with a uniformly random root. Draw order: root, activation
    /// seed, edge tests.
    pub fn tuple(&mut self, rng: &mut impl RngCore) -> RRTuple {
        let v = self.pick_root(rng);
        self.tuple_of(v, rng)
    }
}

pub(crate) struct SampleMeta {
    pub layer_starts: Vec<usize>,
    pub lower_len: usize,
    pub edges: Vec<(u32, u32, EdgeId)>,
    pub hit_existing: bool,
    pub edges_tested: u64,
}

fn build_tuple(root: NodeId, s: Sample, activation_seed: u64) -> RRTuple {
    let mut edges = s.edges;
    edges.sort_unstable_by_key(|&(a, b, _)| (a, b));
    let mut out_offsets = vec![0usize; s.nodes.len() + 1];
    for &(a, _, _) in &edges {
        out_offsets[a as usize + 1] += 1;
    }
    for i in 0..s.nodes.len() {
        out_offsets[i + 1] += out_offsets[i];
    }
    RRTuple {
        root,
        nodes: s.nodes,
        layer_starts: s.layer_starts,
        lower_len: s.lower_len,
        edges,
        out_offsets,
        hit_existing: s.hit_existing,
        activation_seed,
        edges_tested: s.edges_tested,
    }
}

/// RR-tuple rooted at `v`.
pub fn generate_rr_tuple_of(g: &DirectedGraph, cfg: &CascadeConfig, v: NodeId, rng: &mut impl RngCore) -> RRTuple {
    TupleSampler::new(g, cfg).tuple_of(v, rng)
}

/// RR-tuple rooted at a uniformly random node.
pub fn generate_rr_tuple(g: &DirectedGraph, cfg: &CascadeConfig, rng: &mut impl RngCore) -> RRTuple {
    TupleSampler::new(g, cfg).tuple(rng)
}
