use std::time::Instant;

use super::opt_lower::estimate_opt_lower;
use super::plan::plan_sample_size;
use super::sandwich::{sandwich, SandwichResult};
use super::{secs, Algorithm, PhaseTimings, SolverParams, SolverReport};
use crate::cascades::{estimate_influence, CascadeConfig};
use crate::error::Result;
use crate::graph::DirectedGraph;
use crate::rng::{self, Stream};
use crate::sampling::TupleCollection;

/// Output of the selection pipeline before any Monte-Carlo evaluation.
#[derive(Clone, Debug)]
pub struct RsSelection {
    pub result: SandwichResult,
    pub opt_lower_tuples: usize,
    pub edges_tested: u64,
    pub timings: PhaseTimings,
}

/// Optimum lower bound, sample plan, main collection and sandwich.
pub fn select_rs(g: &DirectedGraph, cfg: &CascadeConfig, params: &SolverParams) -> Result<RsSelection> {
    params.validate(cfg)?;
    let mut timings = PhaseTimings::default();
    let n = g.node_count();
    let k = params.k;
    if k == 0 {
        return Ok(RsSelection {
            result: SandwichResult {
                seeds: Vec::new(),
                upper_seeds: Vec::new(),
                lower_seeds: Vec::new(),
                at_upper: super::BoundValues { exact: 0.0, upper: 0.0, lower: 0.0 },
                at_lower: super::BoundValues { exact: 0.0, upper: 0.0, lower: 0.0 },
                gamma_lower: super::GREEDY_RATIO,
                l: 0,
                f_lo: 0.0,
            },
            opt_lower_tuples: 0,
            edges_tested: 0,
            timings,
        });
    }
    let t = Instant::now();
    let lo = estimate_opt_lower(g, cfg, params)?;
    timings.opt_lower = secs(t.elapsed());
    let plan = plan_sample_size(n, k, params, lo.f_lo)?;
    log::info!(
        "f_lo = {:.3} ({} tuples, certified: {}), l = {}",
        lo.f_lo,
        lo.tuples,
        lo.certified,
        plan.l
    );
    let t = Instant::now();
    let coll = TupleCollection::generate(g, cfg, plan.l, rng::derive(params.seed, Stream::Collection, 0));
    timings.sampling = secs(t.elapsed());
    let t = Instant::now();
    let result = sandwich(g, cfg, &coll, k, lo.f_lo)?;
    timings.selection = secs(t.elapsed());
    Ok(RsSelection { result, opt_lower_tuples: lo.tuples, edges_tested: coll.edges_tested(), timings })
}

/// Reverse Sandwich seed selection, with an optional Monte-Carlo estimate of
/// the chosen seeds' influence.
pub fn run_rs(g: &DirectedGraph, cfg: &CascadeConfig, params: &SolverParams) -> Result<SolverReport> {
    let sel = select_rs(g, cfg, params)?;
    finish(Algorithm::Rs, g, cfg, params, sel)
}

pub(crate) fn finish(
    algorithm: Algorithm,
    g: &DirectedGraph,
    eval_cfg: &CascadeConfig,
    params: &SolverParams,
    sel: RsSelection,
) -> Result<SolverReport> {
    let mut timings = sel.timings;
    let t = Instant::now();
    let influence = evaluate(g, eval_cfg, &sel.result.seeds, params)?;
    timings.evaluation = secs(t.elapsed());
    Ok(SolverReport {
        algorithm,
        seeds: sel.result.seeds.clone(),
        l: sel.result.l,
        f_lo: sel.result.f_lo,
        gamma_lower: Some(sel.result.gamma_lower),
        estimate: if sel.result.seeds == sel.result.upper_seeds {
            sel.result.at_upper.exact
        } else {
            sel.result.at_lower.exact
        },
        bounds: Some(sel.result),
        influence,
        opt_lower_tuples: sel.opt_lower_tuples,
        edges_tested: sel.edges_tested,
        timings,
    })
}

pub(crate) fn evaluate(
    g: &DirectedGraph,
    cfg: &CascadeConfig,
    seeds: &[crate::graph::NodeId],
    params: &SolverParams,
) -> Result<Option<crate::cascades::InfluenceEstimate>> {
    if params.eval_trials == 0 {
        return Ok(None);
    }
    estimate_influence(g, cfg, seeds, params.eval_trials, rng::derive(params.seed, Stream::Evaluation, 0)).map(Some)
}
