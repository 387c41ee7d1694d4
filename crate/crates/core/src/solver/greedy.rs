use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::sampling::CoverageIndex;

fn prepare(index: &CoverageIndex, candidates: &[NodeId]) -> Result<Vec<NodeId>> {
    if index.universe() == 0 {
        return Err(Error::EmptyCollection);
    }
    let mut c = candidates.to_vec();
    c.sort_unstable();
    c.dedup();
    if let Some(&bad) = c.iter().find(|&&v| v as usize >= index.elements()) {
        return Err(Error::InvalidParameter(format!("candidate {bad} is outside the index")));
    }
    Ok(c)
}

fn gain(index: &CoverageIndex, covered: &[bool], v: NodeId) -> usize {
    index.sets_of(v).iter().filter(|&&t| !covered[t as usize]).count()
}

fn cover(index: &CoverageIndex, covered: &mut [bool], v: NodeId) {
    for &t in index.sets_of(v) {
        covered[t as usize] = true;
    }
}

/// Greedy maximum coverage with lazy re-evaluation. Returns
/// `min(k, |candidates|)` seeds in selection order; ties go to the smallest
/// node id.
pub fn greedy_max_coverage(index: &CoverageIndex, k: usize, candidates: &[NodeId]) -> Result<Vec<NodeId>> {
    let cands = prepare(index, candidates)?;
    let k = k.min(cands.len());
    let mut covered = vec![false; index.universe()];
    // (gain, smallest id first, round the gain was computed in)
    let mut heap: BinaryHeap<(usize, Reverse<NodeId>, usize)> =
        cands.iter().map(|&v| (index.sets_of(v).len(), Reverse(v), 0)).collect();
    let mut seeds = Vec::with_capacity(k);
    while seeds.len() < k {
        let Some((g, Reverse(v), round)) = heap.pop() else { break };
        if round == seeds.len() {
            cover(index, &mut covered, v);
            seeds.push(v);
        } else {
            let fresh = gain(index, &covered, v);
            debug_assert!(fresh <= g);
            heap.push((fresh, Reverse(v), seeds.len()));
        }
    }
    Ok(seeds)
}

/// Plain greedy that rescans every candidate each round. Same output as
/// [`greedy_max_coverage`].
pub fn naive_greedy_max_coverage(index: &CoverageIndex, k: usize, candidates: &[NodeId]) -> Result<Vec<NodeId>> {
    let mut rest = prepare(index, candidates)?;
    let k = k.min(rest.len());
    let mut covered = vec![false; index.universe()];
    let mut seeds = Vec::with_capacity(k);
    while seeds.len() < k {
        let mut best = 0;
        let mut best_gain = gain(index, &covered, rest[0]);
        for (i, &v) in rest.iter().enumerate().skip(1) {
            let g = gain(index, &covered, v);
            if g > best_gain {
                best = i;
                best_gain = g;
            }
        }
        let v = rest.remove(best);
        cover(index, &mut covered, v);
        seeds.push(v);
    }
    Ok(seeds)
}
