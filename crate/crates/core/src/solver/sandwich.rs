use serde::Serialize;

use super::greedy::greedy_max_coverage;
use super::GREEDY_RATIO;
use crate::cascades::CascadeConfig;
use crate::error::Result;
use crate::graph::{DirectedGraph, NodeId};
use crate::sampling::{EstimateKind, TupleCollection};

/// The three estimator values at one seed set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundValues {
    pub exact: f64,
    pub upper: f64,
    pub lower: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichResult {
    pub seeds: Vec<NodeId>,
    pub upper_seeds: Vec<NodeId>,
    pub lower_seeds: Vec<NodeId>,
    pub at_upper: BoundValues,
    pub at_lower: BoundValues,
    pub gamma_lower: f64,
    pub l: usize,
    pub f_lo: f64,
}

fn counts(g: &DirectedGraph, cfg: &CascadeConfig, coll: &TupleCollection, s: &[NodeId]) -> Result<[u64; 3]> {
    Ok([
        coll.count(g, cfg, s, EstimateKind::Exact)?,
        coll.count(g, cfg, s, EstimateKind::Upper)?,
        coll.count(g, cfg, s, EstimateKind::Lower)?,
    ])
}

/// Greedy on the upper and on the lower coverage, keeping whichever scores
/// higher on the unbiased estimator. Ties keep the upper-bound solution.
pub fn sandwich(
    g: &DirectedGraph,
    cfg: &CascadeConfig,
    coll: &TupleCollection,
    k: usize,
    f_lo: f64,
) -> Result<SandwichResult> {
    let upper_seeds = greedy_max_coverage(coll.upper_index(), k, cfg.candidates())?;
    let lower_seeds = if coll.upper_index() == coll.lower_index() {
        upper_seeds.clone()
    } else {
        greedy_max_coverage(coll.lower_index(), k, cfg.candidates())?
    };
    let cu = counts(g, cfg, coll, &upper_seeds)?;
    let cl = if lower_seeds == upper_seeds { cu } else { counts(g, cfg, coll, &lower_seeds)? };
    let scale = coll.node_count() as f64 / coll.len() as f64;
    let values = |c: [u64; 3]| BoundValues {
        exact: c[0] as f64 * scale,
        upper: c[1] as f64 * scale,
        lower: c[2] as f64 * scale,
    };
    let gamma_lower = if cu[1] == 0 { GREEDY_RATIO } else { GREEDY_RATIO * cu[0] as f64 / cu[1] as f64 };
    let seeds = if cu[0] >= cl[0] { upper_seeds.clone() } else { lower_seeds.clone() };
    Ok(SandwichResult {
        seeds,
        upper_seeds,
        lower_seeds,
        at_upper: values(cu),
        at_lower: values(cl),
        gamma_lower,
        l: coll.len(),
        f_lo,
    })
}
