//! Comparison algorithms: NR-Greedy, plain greedy on the unbiased tuple
//! estimator, and MaxInf, which ignores the existing cascades while
//! selecting.

use std::time::Instant;

use crate::cascades::CascadeConfig;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::par;
use crate::rng::{self, Stream};
use crate::sampling::{CoverageIndex, RRTuple, SeedSet, TupleCollection, TupleEvaluator};
use crate::solver::rs::{evaluate, finish};
use crate::solver::{
    estimate_opt_lower, sample_bounds, secs, select_rs, Algorithm, PhaseTimings, SolverParams, SolverReport,
};

/// Greedy on `G(S)` over `l = ceil(l2 / f_lo)` tuples. Each round computes
/// the exact marginal of every remaining candidate, re-evaluating only the
/// tuples whose upper set contains it, and stops early if the best marginal
/// is negative.
pub fn run_nr_greedy(g: &DirectedGraph, cfg: &CascadeConfig, params: &SolverParams) -> Result<SolverReport> {
    params.validate(cfg)?;
    let mut timings = PhaseTimings::default();
    let n = g.node_count();
    let mut report = SolverReport {
        algorithm: Algorithm::NrGreedy,
        seeds: Vec::new(),
        l: 0,
        f_lo: 0.0,
        gamma_lower: None,
        bounds: None,
        estimate: 0.0,
        influence: None,
        opt_lower_tuples: 0,
        edges_tested: 0,
        timings,
    };
    if params.k > 0 {
        let t = Instant::now();
        let lo = estimate_opt_lower(g, cfg, params)?;
        timings.opt_lower = secs(t.elapsed());
        let (_, l2) = sample_bounds(n, params.k, params);
        let need = (l2 / lo.f_lo).ceil().max(1.0);
        if need > params.max_tuples as f64 {
            return Err(Error::ResourceCap { needed: need as u64, cap: params.max_tuples as u64 });
        }
        let l = need as usize;
        log::info!("nr_greedy: f_lo = {:.3}, l = {l}", lo.f_lo);
        let t = Instant::now();
        let coll = TupleCollection::generate(g, cfg, l, rng::derive(params.seed, Stream::Collection, 0));
        let tuples: Vec<RRTuple> = par::map_chunks(0..l, 1024, || (), |_, r| r.map(|i| coll.tuple(g, cfg, i)).collect::<Vec<_>>())
            .into_iter()
            .flatten()
            .collect();
        timings.sampling = secs(t.elapsed());
        let t = Instant::now();
        let (seeds, count) = nr_greedy_select(&tuples, coll.upper_index(), cfg, params.k)?;
        timings.selection = secs(t.elapsed());
        report.seeds = seeds;
        report.l = l;
        report.f_lo = lo.f_lo;
        report.estimate = n as f64 * count as f64 / l as f64;
        report.opt_lower_tuples = lo.tuples;
        report.edges_tested = coll.edges_tested();
    }
    let t = Instant::now();
    report.influence = evaluate(g, cfg, &report.seeds, params)?;
    timings.evaluation = secs(t.elapsed());
    report.timings = timings;
    Ok(report)
}

/// Plain greedy on the number of tuples whose root the seeds win, over
/// materialized tuples. Returns the seeds and the final count.
pub fn nr_greedy_select(
    tuples: &[RRTuple],
    upper: &CoverageIndex,
    cfg: &CascadeConfig,
    k: usize,
) -> Result<(Vec<NodeId>, u64)> {
    if tuples.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let n = upper.elements();
    let mut chosen = SeedSet::new(n, &[]);
    let mut won = vec![false; tuples.len()];
    let mut total = 0u64;
    let mut remaining: Vec<NodeId> = cfg.candidates().to_vec();
    while chosen.nodes().len() < k && !remaining.is_empty() {
        let chosen_ref = &chosen;
        let won_ref = &won;
        let gains = par::map_init(0..remaining.len(), TupleEvaluator::new, |ev, i| -> Result<i64> {
            let v = remaining[i];
            let with = chosen_ref.with(v);
            let mut delta = 0i64;
            for &t in upper.sets_of(v) {
                let now = ev.eval(&tuples[t as usize], cfg, &with)?;
                delta += now as i64 - won_ref[t as usize] as i64;
            }
            Ok(delta)
        });
        let mut best: Option<(usize, i64)> = None;
        for (i, g) in gains.into_iter().enumerate() {
            let g = g?;
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((i, g));
            }
        }
        let (i, gain) = best.expect("candidates remain");
        if gain < 0 {
            break;
        }
        let v = remaining.remove(i);
        let mut ev = TupleEvaluator::new();
        let with = chosen.with(v);
        for &t in upper.sets_of(v) {
            won[t as usize] = ev.eval(&tuples[t as usize], cfg, &with)?;
        }
        chosen.insert(v);
        total = (total as i64 + gain) as u64;
    }
    Ok((chosen.nodes().to_vec(), total))
}

/// Reverse Sandwich run as if no other cascade existed, evaluated under the
/// full configuration.
pub fn run_maxinf(g: &DirectedGraph, cfg: &CascadeConfig, params: &SolverParams) -> Result<SolverReport> {
    let blind = cfg.without_existing();
    let sel = select_rs(g, &blind, params)?;
    finish(Algorithm::MaxInf, g, cfg, params, sel)
}
