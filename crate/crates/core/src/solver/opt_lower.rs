use serde::Serialize;

use super::greedy::greedy_max_coverage;
use super::plan::ln_binomial;
use super::SolverParams;
use crate::cascades::CascadeConfig;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::rng::{self, Stream};
use crate::sampling::TupleCollection;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptLower {
    pub f_lo: f64,
    /// Tuples generated by the estimation.
    pub tuples: usize,
    /// False when no guess was certified and the floor was used.
    pub certified: bool,
}

/// Lower bound on the best achievable lower-bound coverage, by halving
/// guesses `x = n / 2^i`. Round `i` grows a dedicated collection to
/// `lambda / x` tuples and certifies `x` when the greedy lower-coverage
/// solution reaches `(1 + eps0) x`; the bound returned is that coverage
/// divided by `1 + eps0`.
pub fn estimate_opt_lower(g: &DirectedGraph, cfg: &CascadeConfig, params: &SolverParams) -> Result<OptLower> {
    let n = g.node_count();
    let k = params.k.min(cfg.candidates().len()).max(1);
    let nf = n as f64;
    let eps = params.eps0;
    let log2n = nf.log2().max(1.0);
    let lambda = nf * (2.0 + 2.0 * eps / 3.0) * (ln_binomial(n, k) + params.n_fail.ln() + log2n.ln()) / (eps * eps);
    let rounds = (log2n as usize).saturating_sub(1).max(1);
    let mut coll = TupleCollection::generate(g, cfg, 0, rng::derive(params.seed, Stream::OptLower, 0));
    let mut estimate = 0.0;
    for i in 1..=rounds {
        let x = nf / 2f64.powi(i as i32);
        let theta = (lambda / x).ceil();
        if theta > params.max_tuples as f64 {
            return Err(Error::ResourceCap { needed: theta as u64, cap: params.max_tuples as u64 });
        }
        coll.extend_to(g, cfg, theta as usize);
        let seeds = greedy_max_coverage(coll.lower_index(), k, cfg.candidates())?;
        estimate = nf * coll.lower_index().covered(&seeds) as f64 / coll.len() as f64;
        log::debug!("opt lower round {i}: x = {x:.3}, tuples = {}, coverage = {estimate:.3}", coll.len());
        if estimate >= (1.0 + eps) * x {
            return Ok(OptLower { f_lo: estimate / (1.0 + eps), tuples: coll.len(), certified: true });
        }
    }
    Ok(OptLower { f_lo: (estimate / (1.0 + eps)).max(1.0), tuples: coll.len(), certified: false })
}
