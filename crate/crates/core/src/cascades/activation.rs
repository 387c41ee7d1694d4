//! Activation functions: which cascade wins when several reach a node in the
//! same round (or seed it at time zero).

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use smallvec::SmallVec;

use super::Cascade;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, EdgeId, NodeId};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActivationRule {
    /// Per-node total order over cascades.
    CascadeOrder,
    /// Per-node total order over in-neighbors.
    NeighborOrder,
    /// Uniform over the distinct offered cascades.
    Random,
    /// The new cascade wins whenever it is offered.
    Dominating,
    /// The new cascade loses whenever another cascade is also offered.
    Dominated,
    /// Winner looked up from a table keyed by the offered cascade set.
    ExplicitTable,
}

impl ActivationRule {
    pub fn name(self) -> &'static str {
        match self {
            ActivationRule::CascadeOrder => "cascade_order",
            ActivationRule::NeighborOrder => "neighbor_order",
            ActivationRule::Random => "random",
            ActivationRule::Dominating => "dominating",
            ActivationRule::Dominated => "dominated",
            ActivationRule::ExplicitTable => "explicit_table",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "cascade_order" | "ca" => ActivationRule::CascadeOrder,
            "neighbor_order" | "na" => ActivationRule::NeighborOrder,
            "random" | "ra" => ActivationRule::Random,
            "dominating" => ActivationRule::Dominating,
            "dominated" => ActivationRule::Dominated,
            "explicit_table" => ActivationRule::ExplicitTable,
            _ => return None,
        })
    }

    pub fn is_deterministic(self) -> bool {
        self != ActivationRule::Random
    }
}

/// One cascade reaching a node. `edge` is `None` for seed-time offers, where
/// `from` is the node itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Offer {
    pub from: NodeId,
    pub cascade: Cascade,
    pub edge: Option<EdgeId>,
}

/// Explicit activation table. Node-specific entries take precedence over
/// entries that apply to every node.
#[derive(Clone, Debug, Default)]
pub struct ActivationTable {
    entries: HashMap<(Option<NodeId>, Vec<Cascade>), Cascade>,
}

impl ActivationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `offered -> winner`, for one node or (with `None`) for all nodes.
    pub fn insert(&mut self, node: Option<NodeId>, offered: &[Cascade], winner: Cascade) -> Result<()> {
        let mut key: Vec<Cascade> = offered.to_vec();
        key.sort_unstable();
        key.dedup();
        if !key.contains(&winner) {
            return Err(Error::InvalidConfig(format!(
                "table winner {winner:?} is not among offered cascades {key:?}"
            )));
        }
        self.entries.insert((node, key), winner);
        Ok(())
    }

    fn lookup(&self, node: NodeId, offered: &[Cascade]) -> Option<Cascade> {
        // `offered` is sorted and distinct
        let key = offered.to_vec();
        self.entries
            .get(&(Some(node), key.clone()))
            .or_else(|| self.entries.get(&(None, key)))
            .copied()
    }

    fn max_cascade(&self) -> Option<Cascade> {
        self.entries.iter().flat_map(|((_, k), w)| k.iter().chain(Some(w))).max().copied()
    }
}

#[derive(Clone, Debug)]
pub struct ActivationSpec {
    rule: ActivationRule,
    num_cascades: usize,
    /// `cascade_rank[v * num_cascades + c]`; the highest rank wins.
    cascade_rank: Vec<u16>,
    /// Rank of each edge among the in-edges of its target (neighbor order).
    neighbor_rank: Vec<u32>,
    table: Option<ActivationTable>,
    rng_seed: u64,
}

impl ActivationSpec {
    /// Generates an activation spec for `num_cascades` cascades (including
    /// the new one). Per-node cascade orders are drawn for every rule: they
    /// resolve the fallbacks of the dominating/dominated rules and seed-time
    /// conflicts under the neighbor order.
    pub fn generate(rule: ActivationRule, g: &DirectedGraph, num_cascades: usize, rng_seed: u64) -> Result<Self> {
        if rule == ActivationRule::ExplicitTable {
            return Err(Error::InvalidConfig("explicit_table requires a table".into()));
        }
        Self::generate_inner(rule, g, num_cascades, rng_seed, None)
    }

    pub fn with_table(g: &DirectedGraph, num_cascades: usize, table: ActivationTable, rng_seed: u64) -> Result<Self> {
        if let Some(c) = table.max_cascade() {
            if c.index() >= num_cascades {
                return Err(Error::InvalidConfig(format!("table refers to unknown cascade {c:?}")));
            }
        }
        Self::generate_inner(ActivationRule::ExplicitTable, g, num_cascades, rng_seed, Some(table))
    }

    fn generate_inner(
        rule: ActivationRule,
        g: &DirectedGraph,
        num_cascades: usize,
        rng_seed: u64,
        table: Option<ActivationTable>,
    ) -> Result<Self> {
        if num_cascades == 0 || num_cascades > u16::MAX as usize {
            return Err(Error::InvalidConfig(format!("unsupported cascade count {num_cascades}")));
        }
        let n = g.node_count();
        let mut r = rng::stream_rng(rng_seed, rng::Stream::ActivationOrder, 0);
        let mut cascade_rank = Vec::with_capacity(n * num_cascades);
        let mut perm: Vec<u16> = (0..num_cascades as u16).collect();
        for _ in 0..n {
            perm.shuffle(&mut r);
            cascade_rank.extend_from_slice(&perm);
        }
        let mut neighbor_rank = Vec::new();
        if rule == ActivationRule::NeighborOrder {
            let mut r = rng::stream_rng(rng_seed, rng::Stream::ActivationOrder, 1);
            neighbor_rank = vec![0u32; g.edge_count()];
            let mut ranks: Vec<u32> = Vec::new();
            for v in 0..n as NodeId {
                ranks.clear();
                ranks.extend(0..g.in_degree(v) as u32);
                ranks.shuffle(&mut r);
                for ((_, e, _), &rank) in g.in_edges(v).zip(ranks.iter()) {
                    neighbor_rank[e as usize] = rank;
                }
            }
        }
        Ok(ActivationSpec { rule, num_cascades, cascade_rank, neighbor_rank, table, rng_seed })
    }

    /// Builds a cascade-order style spec from explicit ranks,
    /// `ranks[v][c]` with higher winning.
    pub fn from_cascade_ranks(rule: ActivationRule, ranks: &[Vec<u16>]) -> Result<Self> {
        if matches!(rule, ActivationRule::NeighborOrder | ActivationRule::ExplicitTable) {
            return Err(Error::InvalidConfig(format!("{} cannot be built from cascade ranks", rule.name())));
        }
        let num_cascades = ranks.first().map_or(0, |r| r.len());
        let mut cascade_rank = Vec::with_capacity(ranks.len() * num_cascades);
        for r in ranks {
            let mut sorted = r.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if r.len() != num_cascades || sorted.len() != num_cascades {
                return Err(Error::InvalidConfig("cascade ranks must be total orders of equal size".into()));
            }
            cascade_rank.extend_from_slice(r);
        }
        Ok(ActivationSpec { rule, num_cascades, cascade_rank, neighbor_rank: Vec::new(), table: None, rng_seed: 0 })
    }

    pub fn rule(&self) -> ActivationRule {
        self.rule
    }

    pub fn num_cascades(&self) -> usize {
        self.num_cascades
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn node_count(&self) -> usize {
        self.cascade_rank.len() / self.num_cascades.max(1)
    }

    pub(crate) fn covers_edges(&self, m: usize) -> bool {
        self.rule != ActivationRule::NeighborOrder || self.neighbor_rank.len() == m
    }

    fn rank(&self, v: NodeId, c: Cascade) -> u16 {
        self.cascade_rank[v as usize * self.num_cascades + c.index()]
    }

    fn best_by_cascade_order(&self, v: NodeId, offered: &[Cascade]) -> Cascade {
        *offered.iter().max_by_key(|&&c| self.rank(v, c)).expect("nonempty")
    }

    /// Picks the cascade that activates `node` given the offers it received.
    /// The result is always one of the offered cascades.
    pub fn resolve<R: Rng + ?Sized>(&self, node: NodeId, offers: &[Offer], rng: &mut R) -> Result<Cascade> {
        let mut distinct: SmallVec<[Cascade; 8]> = offers.iter().map(|o| o.cascade).collect();
        distinct.sort_unstable();
        distinct.dedup();
        match distinct.len() {
            0 => return Err(Error::EmptyOffers(node)),
            1 => return Ok(distinct[0]),
            _ => {}
        }
        Ok(match self.rule {
            ActivationRule::CascadeOrder => self.best_by_cascade_order(node, &distinct),
            ActivationRule::NeighborOrder => {
                let via_edge = offers
                    .iter()
                    .filter_map(|o| o.edge.map(|e| (self.neighbor_rank[e as usize], o.cascade)))
                    .max_by_key(|&(rank, _)| rank);
                match via_edge {
                    Some((_, c)) => c,
                    None => self.best_by_cascade_order(node, &distinct),
                }
            }
            ActivationRule::Random => distinct[rng.random_range(0..distinct.len())],
            ActivationRule::Dominating => {
                if distinct.contains(&Cascade::NEW) {
                    Cascade::NEW
                } else {
                    self.best_by_cascade_order(node, &distinct)
                }
            }
            ActivationRule::Dominated => {
                distinct.retain(|c| *c != Cascade::NEW);
                self.best_by_cascade_order(node, &distinct)
            }
            ActivationRule::ExplicitTable => {
                let table = self.table.as_ref().expect("explicit table present");
                table.lookup(node, &distinct).ok_or_else(|| Error::TableMiss {
                    node,
                    offered: distinct.iter().map(|c| c.0).collect(),
                })?
            }
        })
    }
}
