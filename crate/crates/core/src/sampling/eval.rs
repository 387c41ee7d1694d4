use super::tuple::RRTuple;
use super::Membership;
use crate::cascades::{Cascade, CascadeConfig, Network, Simulator};
use crate::error::Result;
use crate::graph::{EdgeId, NodeId};
use crate::rng;

impl Network for RRTuple {
    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn global(&self, local: u32) -> NodeId {
        self.nodes[local as usize]
    }

    fn for_each_out(&self, local: u32, mut f: impl FnMut(u32, EdgeId, f64)) {
        let l = local as usize;
        for &(_, t, e) in &self.edges[self.out_offsets[l]..self.out_offsets[l + 1]] {
            f(t, e, 1.0);
        }
    }
}

/// Whether `seeds` meets the upper set of `tuple`.
pub fn eval_upper(tuple: &RRTuple, seeds: &impl Membership) -> bool {
    tuple.upper().iter().any(|&v| seeds.contains(v))
}

/// Whether `seeds` meets the lower set of `tuple`.
pub fn eval_lower(tuple: &RRTuple, seeds: &impl Membership) -> bool {
    tuple.lower().iter().any(|&v| seeds.contains(v))
}

/// Evaluates the root's outcome in the deterministic instance induced by a
/// tuple: the sampled subgraph with every edge live, existing seeds
/// restricted to it and the same activation functions. The random rule
/// draws from the tuple's frozen activation seed.
#[derive(Default)]
pub struct TupleEvaluator {
    sim: Simulator,
}

impl TupleEvaluator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Full simulation inside the tuple's instance.
    pub fn simulate(&mut self, tuple: &RRTuple, cfg: &CascadeConfig, seeds: &impl Membership) -> Result<bool> {
        for (local, &v) in tuple.nodes.iter().enumerate() {
            for &c in cfg.existing_seeds_of(v) {
                self.sim.push_seed(local as u32, c);
            }
            if seeds.contains(v) {
                self.sim.push_seed(local as u32, Cascade::NEW);
            }
        }
        let mut r = rng::seeded(tuple.activation_seed);
        self.sim.run(tuple, cfg.activation(), |_, _, _| true, &mut r, Some(0))?;
        Ok(self.sim.state(0) == Some(Cascade::NEW))
    }

    /// Same value as [`simulate`](Self::simulate), skipping the simulation
    /// when the bounds already decide it: meeting the lower set is
    /// sufficient and meeting the upper set is necessary.
    pub fn eval(&mut self, tuple: &RRTuple, cfg: &CascadeConfig, seeds: &impl Membership) -> Result<bool> {
        if eval_lower(tuple, seeds) {
            return Ok(true);
        }
        if !tuple.nodes[tuple.lower_len..].iter().any(|&v| seeds.contains(v)) {
            return Ok(false);
        }
        self.simulate(tuple, cfg, seeds)
    }
}

/// Whether the root ends up active in the new cascade within the tuple's
/// induced instance.
pub fn eval_g(tuple: &RRTuple, cfg: &CascadeConfig, seeds: &impl Membership) -> Result<bool> {
    TupleEvaluator::new().eval(tuple, cfg, seeds)
}
