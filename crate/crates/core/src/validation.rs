//! Checks of the tuple sampler against exact enumeration on tiny instances:
//! unbiasedness of the estimator, the pointwise ordering
//! `lower <= g <= upper`, and exactness of the bounds in the regimes where
//! they are tight.

use serde::Serialize;

use crate::cascades::{ActivationRule, CascadeConfig};
use crate::error::Result;
use crate::graph::{DirectedGraph, NodeId};
use crate::oracle;
use crate::par;
use crate::sampling::{eval_lower, eval_upper, EstimateKind, SamplerFault, SeedSet, TupleCollection, TupleEvaluator};

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub tuples: usize,
    pub seed: u64,
    /// Number of seed sets compared with the oracle.
    pub sets: usize,
    /// Allowed deviation in standard errors.
    pub sigmas: f64,
    #[doc(hidden)]
    pub fault: SamplerFault,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { tuples: 100_000, seed: 0, sets: 6, sigmas: 3.0, fault: SamplerFault::None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRow {
    pub seeds: Vec<NodeId>,
    pub estimate: f64,
    pub exact: f64,
    pub stderr: f64,
}

impl EstimateRow {
    pub fn within(&self, sigmas: f64) -> bool {
        if self.stderr == 0.0 {
            return (self.estimate - self.exact).abs() < 1e-9;
        }
        (self.estimate - self.exact).abs() <= sigmas * self.stderr
    }
}

/// Violation counts over every tuple and every tested seed set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OrderingCounts {
    pub evaluations: u64,
    /// `lower > g` or `g > upper`.
    pub ordering: u64,
    pub upper_mismatch: u64,
    pub lower_mismatch: u64,
    /// Tuples whose upper and lower sets differ.
    pub split_tuples: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub tuples: usize,
    pub rows: Vec<EstimateRow>,
    pub counts: OrderingCounts,
    pub checks: Vec<Check>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Seed sets used for the comparison: singletons by decreasing out-degree,
/// then pairs of those, up to `count`.
pub fn probe_sets(g: &DirectedGraph, cfg: &CascadeConfig, count: usize) -> Vec<Vec<NodeId>> {
    let mut c = cfg.candidates().to_vec();
    c.sort_by_key(|&v| (std::cmp::Reverse(g.out_degree(v)), v));
    let half = count.div_ceil(2).min(c.len());
    let mut sets: Vec<Vec<NodeId>> = c[..half].iter().map(|&v| vec![v]).collect();
    'pairs: for i in 0..c.len() {
        for j in i + 1..c.len() {
            if sets.len() >= count {
                break 'pairs;
            }
            sets.push(vec![c[i], c[j]]);
        }
    }
    sets
}

/// Singletons and pairs of candidates.
pub fn singletons_and_pairs(cfg: &CascadeConfig) -> Vec<Vec<NodeId>> {
    let c = cfg.candidates();
    let mut out: Vec<Vec<NodeId>> = c.iter().map(|&v| vec![v]).collect();
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            out.push(vec![c[i], c[j]]);
        }
    }
    out
}

/// Compares estimates on `coll` with the oracle.
pub fn unbiasedness(
    g: &DirectedGraph,
    cfg: &CascadeConfig,
    coll: &TupleCollection,
    sets: &[Vec<NodeId>],
) -> Result<Vec<EstimateRow>> {
    let n = g.node_count() as f64;
    let l = coll.len() as f64;
    sets.iter()
        .map(|s| {
            let exact = oracle::exact_influence(g, cfg, s)?;
            let estimate = coll.estimate(g, cfg, s, EstimateKind::Exact)?;
            let p = (exact / n).clamp(0.0, 1.0);
            Ok(EstimateRow { seeds: s.clone(), estimate, exact, stderr: n * (p * (1.0 - p) / l).sqrt() })
        })
        .collect()
}

/// Evaluates every tuple of `coll` under every set in `sets` by full
/// simulation and counts violations.
pub fn ordering(g: &DirectedGraph, cfg: &CascadeConfig, coll: &TupleCollection, sets: &[Vec<NodeId>]) -> Result<OrderingCounts> {
    let n = g.node_count();
    let masks: Vec<SeedSet> = sets.iter().map(|s| SeedSet::new(n, s)).collect();
    let parts = par::map_chunks(0..coll.len(), 512, TupleEvaluator::new, |ev, range| -> Result<OrderingCounts> {
        let mut c = OrderingCounts::default();
        for i in range {
            let t = coll.tuple(g, cfg, i);
            if t.upper().len() != t.lower().len() {
                c.split_tuples += 1;
            }
            for s in &masks {
                let lo = eval_lower(&t, s);
                let up = eval_upper(&t, s);
                let full = ev.simulate(&t, cfg, s)?;
                c.evaluations += 1;
                c.ordering += ((lo && !full) || (full && !up)) as u64;
                c.upper_mismatch += (full != up) as u64;
                c.lower_mismatch += (full != lo) as u64;
            }
        }
        Ok(c)
    });
    let mut total = OrderingCounts::default();
    for p in parts {
        let p = p?;
        total.evaluations += p.evaluations;
        total.ordering += p.ordering;
        total.upper_mismatch += p.upper_mismatch;
        total.lower_mismatch += p.lower_mismatch;
        total.split_tuples += p.split_tuples;
    }
    Ok(total)
}

/// Runs all checks on one instance.
pub fn oracle_check(g: &DirectedGraph, cfg: &CascadeConfig, opts: &CheckOptions) -> Result<OracleReport> {
    oracle::total_probability(g)?;
    let coll = TupleCollection::generate_with_fault(g, cfg, opts.tuples, opts.seed, opts.fault);
    let rows = unbiasedness(g, cfg, &coll, &probe_sets(g, cfg, opts.sets))?;
    let counts = ordering(g, cfg, &coll, &singletons_and_pairs(cfg))?;
    let mut checks = Vec::new();
    let bad: Vec<_> = rows.iter().filter(|r| !r.within(opts.sigmas)).collect();
    checks.push(Check {
        name: "unbiased",
        passed: bad.is_empty(),
        detail: format!("{} of {} sets within {} standard errors", rows.len() - bad.len(), rows.len(), opts.sigmas),
    });
    checks.push(Check {
        name: "ordering",
        passed: counts.ordering == 0,
        detail: format!("{} violations in {} evaluations", counts.ordering, counts.evaluations),
    });
    match cfg.activation().rule() {
        ActivationRule::Dominating => checks.push(Check {
            name: "upper_tight",
            passed: counts.upper_mismatch == 0,
            detail: format!("upper bound differs from g in {} evaluations", counts.upper_mismatch),
        }),
        ActivationRule::Dominated => checks.push(Check {
            name: "lower_tight",
            passed: counts.lower_mismatch == 0,
            detail: format!("lower bound differs from g in {} evaluations", counts.lower_mismatch),
        }),
        _ => {}
    }
    if cfg.existing_count() == 0 {
        checks.push(Check {
            name: "bounds_coincide",
            passed: counts.split_tuples == 0,
            detail: format!("{} tuples with distinct upper and lower sets", counts.split_tuples),
        });
    }
    Ok(OracleReport { tuples: coll.len(), rows, counts, checks })
}
