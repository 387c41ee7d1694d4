use std::io::Write;

use super::eval::TupleEvaluator;
use super::tuple::{RRTuple, SamplerFault, TupleSampler};
use super::{EstimateKind, Membership};
use crate::cascades::CascadeConfig;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::par;
use crate::rng::{self, Stream};

/// Inverted coverage index: for each node, the ascending ids of the sets
/// (tuples) containing it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoverageIndex {
    offsets: Vec<usize>,
    items: Vec<u32>,
    universe: usize,
}

impl CoverageIndex {
    /// Builds the index from `sets[t]` = elements of set `t`, over elements
    /// `0..elements`.
    pub fn from_sets<'a, I>(elements: usize, sets: I) -> Self
    where
        I: IntoIterator<Item = &'a [NodeId]>,
        I::IntoIter: Clone,
    {
        let sets = sets.into_iter();
        let mut offsets = vec![0usize; elements + 1];
        let mut universe = 0;
        for s in sets.clone() {
            universe += 1;
            for &v in s {
                offsets[v as usize + 1] += 1;
            }
        }
        for i in 0..elements {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut items = vec![0u32; offsets[elements]];
        for (t, s) in sets.enumerate() {
            for &v in s {
                items[fill[v as usize]] = t as u32;
                fill[v as usize] += 1;
            }
        }
        CoverageIndex { offsets, items, universe }
    }

    /// Number of sets.
    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn elements(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    /// Sets containing `v`.
    pub fn sets_of(&self, v: NodeId) -> &[u32] {
        &self.items[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    /// Number of sets met by `seeds`.
    pub fn covered(&self, seeds: &[NodeId]) -> usize {
        let mut hit = vec![false; self.universe];
        let mut count = 0;
        for &v in seeds {
            for &t in self.sets_of(v) {
                if !std::mem::replace(&mut hit[t as usize], true) {
                    count += 1;
                }
            }
        }
        count
    }
}

/// A collection of RR-tuples stored compactly, with upper and lower coverage
/// indices. Tuple `i` is generated from its own stream `(phase seed,
/// Collection, i)`, so the collection is independent of the worker count and
/// any tuple can be replayed in full (including its subgraph) on demand.
#[derive(Clone, Debug)]
pub struct TupleCollection {
    n: usize,
    phase_seed: u64,
    fault: SamplerFault,
    roots: Vec<NodeId>,
    offsets: Vec<usize>,
    lower_len: Vec<u32>,
    arena: Vec<NodeId>,
    edges_tested: u64,
    upper: CoverageIndex,
    lower: CoverageIndex,
}

const GEN_CHUNK: usize = 2048;

struct Chunk {
    roots: Vec<NodeId>,
    lens: Vec<u32>,
    lower: Vec<u32>,
    arena: Vec<NodeId>,
    tested: u64,
}

impl TupleCollection {
    pub fn generate(g: &DirectedGraph, cfg: &CascadeConfig, count: usize, phase_seed: u64) -> Self {
        Self::generate_with_fault(g, cfg, count, phase_seed, SamplerFault::None)
    }

    #[doc(hidden)]
    pub fn generate_with_fault(
        g: &DirectedGraph,
        cfg: &CascadeConfig,
        count: usize,
        phase_seed: u64,
        fault: SamplerFault,
    ) -> Self {
        let mut c = TupleCollection {
            n: g.node_count(),
            phase_seed,
            fault,
            roots: Vec::new(),
            offsets: vec![0],
            lower_len: Vec::new(),
            arena: Vec::new(),
            edges_tested: 0,
            upper: CoverageIndex::default(),
            lower: CoverageIndex::default(),
        };
        c.extend(g, cfg, count);
        c
    }

    pub(crate) fn tuple_seed(&self, i: usize) -> u64 {
        rng::derive(self.phase_seed, Stream::Collection, i as u64)
    }

    /// Appends tuples until the collection holds `target` of them.
    pub fn extend_to(&mut self, g: &DirectedGraph, cfg: &CascadeConfig, target: usize) {
        if target > self.len() {
            self.extend(g, cfg, target - self.len());
        }
    }

    /// Appends `count` tuples and rebuilds the indices.
    pub fn extend(&mut self, g: &DirectedGraph, cfg: &CascadeConfig, count: usize) {
        let start = self.len();
        let fault = self.fault;
        let this = &*self;
        let chunks = par::map_chunks(
            start..start + count,
            GEN_CHUNK,
            || {
                let mut s = TupleSampler::new(g, cfg);
                s.fault = fault;
                s
            },
            |sampler, range| {
                let mut out = Chunk {
                    roots: Vec::with_capacity(range.len()),
                    lens: Vec::with_capacity(range.len()),
                    lower: Vec::with_capacity(range.len()),
                    arena: Vec::new(),
                    tested: 0,
                };
                for i in range {
                    let mut r = rng::seeded(this.tuple_seed(i));
                    let root = sampler.pick_root(&mut r);
                    let _activation = rand::RngCore::next_u64(&mut r);
                    let before = out.arena.len();
                    let meta = sampler.sample_into(root, &mut r, false, &mut out.arena);
                    out.roots.push(root);
                    out.lens.push((out.arena.len() - before) as u32);
                    out.lower.push(meta.lower_len as u32);
                    out.tested += meta.edges_tested;
                }
                out
            },
        );
        for ch in chunks {
            self.roots.extend_from_slice(&ch.roots);
            self.lower_len.extend_from_slice(&ch.lower);
            let mut off = *self.offsets.last().unwrap();
            for len in ch.lens {
                off += len as usize;
                self.offsets.push(off);
            }
            self.arena.extend_from_slice(&ch.arena);
            self.edges_tested += ch.tested;
        }
        self.rebuild_indices();
    }

    fn rebuild_indices(&mut self) {
        let l = self.len();
        self.upper = CoverageIndex::from_sets(self.n, (0..l).map(|i| self.upper_of(i)));
        self.lower = CoverageIndex::from_sets(self.n, (0..l).map(|i| self.lower_of(i)));
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn root(&self, i: usize) -> NodeId {
        self.roots[i]
    }

    pub fn upper_of(&self, i: usize) -> &[NodeId] {
        &self.arena[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn lower_of(&self, i: usize) -> &[NodeId] {
        &self.arena[self.offsets[i]..self.offsets[i] + self.lower_len[i] as usize]
    }

    pub fn upper_index(&self) -> &CoverageIndex {
        &self.upper
    }

    pub fn lower_index(&self) -> &CoverageIndex {
        &self.lower
    }

    pub fn coverage(&self, kind: EstimateKind) -> &CoverageIndex {
        match kind {
            EstimateKind::Lower => &self.lower,
            _ => &self.upper,
        }
    }

    /// Total edge tests spent generating the collection.
    pub fn edges_tested(&self) -> u64 {
        self.edges_tested
    }

    /// Total number of node entries across all upper sets.
    pub fn total_size(&self) -> usize {
        self.arena.len()
    }

    /// Regenerates tuple `i` in full from its stream.
    pub fn tuple(&self, g: &DirectedGraph, cfg: &CascadeConfig, i: usize) -> RRTuple {
        let mut s = TupleSampler::new(g, cfg);
        s.fault = self.fault;
        self.replay(&mut s, i)
    }

    pub(crate) fn replay(&self, sampler: &mut TupleSampler<'_>, i: usize) -> RRTuple {
        let mut r = rng::seeded(self.tuple_seed(i));
        let t = sampler.tuple(&mut r);
        debug_assert_eq!(t.upper(), self.upper_of(i));
        t
    }

    /// Number of tuples whose evaluator is 1 under `seeds`.
    pub fn count(&self, g: &DirectedGraph, cfg: &CascadeConfig, seeds: &[NodeId], kind: EstimateKind) -> Result<u64> {
        match kind {
            EstimateKind::Upper => Ok(self.upper.covered(seeds) as u64),
            EstimateKind::Lower => Ok(self.lower.covered(seeds) as u64),
            EstimateKind::Exact => {
                let set = super::SeedSet::new(self.n, seeds);
                let mut hit = vec![false; self.len()];
                let mut undecided = Vec::new();
                let mut count = 0u64;
                for &v in seeds {
                    for &t in self.lower.sets_of(v) {
                        if !std::mem::replace(&mut hit[t as usize], true) {
                            count += 1;
                        }
                    }
                }
                for &v in seeds {
                    for &t in self.upper.sets_of(v) {
                        if !std::mem::replace(&mut hit[t as usize], true) {
                            undecided.push(t as usize);
                        }
                    }
                }
                undecided.sort_unstable();
                let parts = par::map_chunks(
                    0..undecided.len(),
                    256,
                    || (TupleSampler::new(g, cfg), TupleEvaluator::new()),
                    |(sampler, eval), range| -> Result<u64> {
                        sampler.fault = self.fault;
                        let mut c = 0;
                        for j in range {
                            let t = self.replay(sampler, undecided[j]);
                            c += eval.simulate(&t, cfg, &set)? as u64;
                        }
                        Ok(c)
                    },
                );
                for p in parts {
                    count += p?;
                }
                Ok(count)
            }
        }
    }

    /// `n * (sum of the chosen evaluator over tuples) / l`.
    pub fn estimate(&self, g: &DirectedGraph, cfg: &CascadeConfig, seeds: &[NodeId], kind: EstimateKind) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let c = self.count(g, cfg, seeds, kind)?;
        Ok(self.n as f64 * c as f64 / self.len() as f64)
    }

    /// Writes one line per tuple: root, upper set, lower set and edges,
    /// using node labels.
    pub fn write_text<W: Write>(&self, g: &DirectedGraph, cfg: &CascadeConfig, mut out: W) -> Result<()> {
        let mut sampler = TupleSampler::new(g, cfg);
        sampler.fault = self.fault;
        let join = |vs: &mut dyn Iterator<Item = NodeId>| vs.map(|v| g.label(v).to_string()).collect::<Vec<_>>().join(",");
        for i in 0..self.len() {
            let t = self.replay(&mut sampler, i);
            let edges = t
                .edges()
                .map(|(a, b)| format!("{}>{}", g.label(a), g.label(b)))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(
                out,
                "root={}\tupper={}\tlower={}\tedges={}",
                g.label(t.root()),
                join(&mut t.upper().iter().copied()),
                join(&mut t.lower().iter().copied()),
                edges
            )?;
        }
        Ok(())
    }
}

impl Membership for super::SeedSet {
    fn contains(&self, v: NodeId) -> bool {
        self.mask[v as usize]
    }
}
