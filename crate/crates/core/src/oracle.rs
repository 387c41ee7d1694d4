//! Exact evaluation on tiny instances by enumerating every live/dead edge
//! realization.
//!
//! Realization `mask` marks edge `e` live when bit `e` is set; masks are
//! enumerated in ascending order and summed in fixed-size blocks, so results
//! are bit-identical for any number of workers.

use crate::cascades::{Cascade, CascadeConfig, Simulator};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::par;
use crate::rng;

pub const MAX_ORACLE_EDGES: usize = 20;
pub const MAX_ORACLE_SUBSETS: u64 = 100_000;

const BLOCK: usize = 1 << 10;

/// One realization of the edge coin flips.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Realization {
    pub live_mask: u32,
    pub probability: f64,
}

impl Realization {
    pub fn is_live(&self, e: u32) -> bool {
        self.live_mask >> e & 1 == 1
    }
}

fn check_edges(g: &DirectedGraph) -> Result<()> {
    if g.edge_count() > MAX_ORACLE_EDGES {
        return Err(Error::GuardExceeded(format!(
            "{} edges, enumeration supports at most {MAX_ORACLE_EDGES}",
            g.edge_count()
        )));
    }
    Ok(())
}

fn probability(g: &DirectedGraph, mask: u32) -> f64 {
    (0..g.edge_count() as u32)
        .map(|e| {
            let p = g.probability(e);
            if mask >> e & 1 == 1 { p } else { 1.0 - p }
        })
        .product()
}

/// All `2^m` realizations in ascending mask order.
pub fn realizations(g: &DirectedGraph) -> Result<impl Iterator<Item = Realization> + '_> {
    check_edges(g)?;
    let total = 1u64 << g.edge_count();
    Ok((0..total).map(move |mask| {
        let mask = mask as u32;
        Realization { live_mask: mask, probability: probability(g, mask) }
    }))
}

/// Sum of realization probabilities; 1 up to rounding.
pub fn total_probability(g: &DirectedGraph) -> Result<f64> {
    realization_sum(g, |_, _| Ok(1.0))
}

fn realization_sum<F>(g: &DirectedGraph, value: F) -> Result<f64>
where
    F: Fn(&mut Simulator, u32) -> Result<f64> + Sync + Send,
{
    check_edges(g)?;
    let total = 1usize << g.edge_count();
    let blocks = par::map_chunks(0..total, BLOCK, Simulator::new, |sim, range| -> Result<f64> {
        let mut acc = 0.0;
        for mask in range {
            let mask = mask as u32;
            let p = probability(g, mask);
            if p > 0.0 {
                acc += p * value(sim, mask)?;
            }
        }
        Ok(acc)
    });
    blocks.into_iter().try_fold(0.0, |acc, b| Ok(acc + b?))
}

fn check_deterministic(cfg: &CascadeConfig) -> Result<()> {
    if !cfg.activation().rule().is_deterministic() {
        return Err(Error::NondeterministicActivation);
    }
    Ok(())
}

fn simulate_realization(
    sim: &mut Simulator,
    g: &DirectedGraph,
    cfg: &CascadeConfig,
    seeds: &[NodeId],
    mask: u32,
) -> Result<usize> {
    for c in 1..=cfg.existing_count() {
        let c = Cascade(c as u16);
        for &v in cfg.seeds(c) {
            sim.push_seed(v, c);
        }
    }
    for &v in seeds {
        sim.push_seed(v, Cascade::NEW);
    }
    // deterministic rules never draw from this stream
    let mut r = rng::seeded(0);
    sim.run(g, cfg.activation(), |e, _, _| mask >> e & 1 == 1, &mut r, None)?;
    Ok(sim.count(Cascade::NEW))
}

/// Exact expected number of nodes active in the new cascade under seed set `seeds`.
pub fn exact_influence(g: &DirectedGraph, cfg: &CascadeConfig, seeds: &[NodeId]) -> Result<f64> {
    check_deterministic(cfg)?;
    if seeds.is_empty() {
        check_edges(g)?;
        return Ok(0.0);
    }
    realization_sum(g, |sim, mask| Ok(simulate_realization(sim, g, cfg, seeds, mask)? as f64))
}

/// Probability that `v` ends up active in the new cascade.
pub fn exact_node_probability(g: &DirectedGraph, cfg: &CascadeConfig, seeds: &[NodeId], v: NodeId) -> Result<f64> {
    check_deterministic(cfg)?;
    realization_sum(g, |sim, mask| {
        simulate_realization(sim, g, cfg, seeds, mask)?;
        Ok(if sim.state(v) == Some(Cascade::NEW) { 1.0 } else { 0.0 })
    })
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Exhaustive search over all `k`-subsets of the candidates. Ties go to the
/// lexicographically smallest subset.
pub fn exact_optimal(g: &DirectedGraph, cfg: &CascadeConfig, k: usize) -> Result<(Vec<NodeId>, f64)> {
    check_deterministic(cfg)?;
    check_edges(g)?;
    let cand = cfg.candidates();
    if k > cand.len() {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds {} candidates", cand.len())));
    }
    let count = binomial(cand.len() as u64, k as u64);
    if count > MAX_ORACLE_SUBSETS {
        return Err(Error::GuardExceeded(format!("{count} subsets, at most {MAX_ORACLE_SUBSETS} supported")));
    }
    if k == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best: Option<(Vec<NodeId>, f64)> = None;
    loop {
        let set: Vec<NodeId> = idx.iter().map(|&i| cand[i]).collect();
        let value = exact_influence(g, cfg, &set)?;
        if best.as_ref().is_none_or(|b| value > b.1) {
            best = Some((set, value));
        }
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(best.expect("at least one subset"));
            }
            i -= 1;
            if idx[i] < cand.len() - k + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
