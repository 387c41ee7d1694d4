//! Synchronous forward diffusion and Monte-Carlo influence estimation.

use rand::{Rng, RngCore};

use super::{ActivationSpec, Cascade, CascadeConfig, Offer};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, EdgeId, NodeId};
use crate::par;
use crate::rng::{self, Stream};

/// A graph the simulator can run on, addressed by local indices.
pub(crate) trait Network {
    fn len(&self) -> usize;
    fn global(&self, local: u32) -> NodeId;
    fn for_each_out(&self, local: u32, f: impl FnMut(u32, EdgeId, f64));
}

impl Network for DirectedGraph {
    fn len(&self) -> usize {
        self.node_count()
    }

    fn global(&self, local: u32) -> NodeId {
        local
    }

    fn for_each_out(&self, local: u32, mut f: impl FnMut(u32, EdgeId, f64)) {
        for (v, e, p) in self.out_edges(local) {
            f(v, e, p);
        }
    }
}

const UNREACHED: u32 = u32::MAX;

/// Reusable scratch for one diffusion run at a time.
#[derive(Default)]
pub(crate) struct Simulator {
    state: Vec<Option<Cascade>>,
    time: Vec<u32>,
    touched: Vec<u32>,
    frontier: Vec<u32>,
    pending: Vec<(u32, Offer)>,
    offers: Vec<Offer>,
    seeds: Vec<(u32, Cascade)>,
}

impl Simulator {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, len: usize) {
        for &v in &self.touched {
            self.state[v as usize] = None;
            self.time[v as usize] = UNREACHED;
        }
        self.touched.clear();
        if self.state.len() < len {
            self.state.resize(len, None);
            self.time.resize(len, UNREACHED);
        }
    }

    fn activate(&mut self, v: u32, c: Cascade, t: u32) {
        debug_assert!(self.state[v as usize].is_none(), "states are write-once");
        self.state[v as usize] = Some(c);
        self.time[v as usize] = t;
        self.touched.push(v);
    }

    pub fn state(&self, local: u32) -> Option<Cascade> {
        self.state[local as usize]
    }

    pub fn push_seed(&mut self, local: u32, c: Cascade) {
        self.seeds.push((local, c));
    }

    /// Runs the diffusion with the seeds queued by `push_seed`. `live`
    /// decides whether an activation attempt along an edge succeeds. When
    /// `target` is given the run stops as soon as that node is activated.
    pub fn run<N, R, L>(
        &mut self,
        net: &N,
        spec: &ActivationSpec,
        mut live: L,
        rng: &mut R,
        target: Option<u32>,
    ) -> Result<()>
    where
        N: Network,
        R: RngCore,
        L: FnMut(EdgeId, f64, &mut R) -> bool,
    {
        self.reset(net.len());
        let mut seeds = std::mem::take(&mut self.seeds);
        seeds.sort_unstable();
        seeds.dedup();
        self.frontier.clear();
        let mut i = 0;
        while i < seeds.len() {
            let v = seeds[i].0;
            let mut j = i;
            while j < seeds.len() && seeds[j].0 == v {
                j += 1;
            }
            let c = if j - i == 1 {
                seeds[i].1
            } else {
                self.offers.clear();
                let from = net.global(v);
                self.offers.extend(seeds[i..j].iter().map(|&(_, c)| Offer { from, cascade: c, edge: None }));
                spec.resolve(from, &self.offers, rng)?
            };
            self.activate(v, c, 0);
            self.frontier.push(v);
            i = j;
        }
        seeds.clear();
        self.seeds = seeds;
        if target.is_some_and(|t| self.state[t as usize].is_some()) {
            return Ok(());
        }

        let mut round = 0u32;
        let mut next = Vec::new();
        while !self.frontier.is_empty() {
            round += 1;
            self.pending.clear();
            for &u in &self.frontier {
                let c = self.state[u as usize].expect("frontier nodes are active");
                let from = net.global(u);
                let state = &self.state;
                let pending = &mut self.pending;
                net.for_each_out(u, |v, e, p| {
                    if state[v as usize].is_none() && live(e, p, rng) {
                        pending.push((v, Offer { from, cascade: c, edge: Some(e) }));
                    }
                });
            }
            self.pending.sort_by_key(|&(v, _)| v);
            next.clear();
            let mut i = 0;
            while i < self.pending.len() {
                let v = self.pending[i].0;
                let mut j = i;
                while j < self.pending.len() && self.pending[j].0 == v {
                    j += 1;
                }
                let c = if j - i == 1 {
                    self.pending[i].1.cascade
                } else {
                    self.offers.clear();
                    self.offers.extend(self.pending[i..j].iter().map(|p| p.1));
                    spec.resolve(net.global(v), &self.offers, rng)?
                };
                self.activate(v, c, round);
                next.push(v);
                i = j;
            }
            std::mem::swap(&mut self.frontier, &mut next);
            if target.is_some_and(|t| self.state[t as usize].is_some()) {
                break;
            }
        }
        Ok(())
    }

    pub fn count(&self, c: Cascade) -> usize {
        self.touched.iter().filter(|&&v| self.state[v as usize] == Some(c)).count()
    }

    fn snapshot(&self, n: usize) -> DiffusionState {
        let mut states = vec![None; n];
        let mut times = vec![None; n];
        for &v in &self.touched {
            states[v as usize] = self.state[v as usize];
            times[v as usize] = Some(self.time[v as usize]);
        }
        DiffusionState { states, times }
    }
}

pub(crate) fn coin<R: RngCore>(_: EdgeId, p: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < p
}

/// Final per-node states and activation rounds of one diffusion run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffusionState {
    states: Vec<Option<Cascade>>,
    times: Vec<Option<u32>>,
}

impl DiffusionState {
    pub fn state(&self, v: NodeId) -> Option<Cascade> {
        self.states[v as usize]
    }

    pub fn time(&self, v: NodeId) -> Option<u32> {
        self.times[v as usize]
    }

    pub fn count(&self, c: Cascade) -> usize {
        self.states.iter().filter(|s| **s == Some(c)).count()
    }

    pub fn new_cascade_count(&self) -> usize {
        self.count(Cascade::NEW)
    }
}

fn queue_seeds(sim: &mut Simulator, cfg: &CascadeConfig, new_seeds: &[NodeId]) {
    for c in 1..=cfg.existing_count() {
        let c = Cascade(c as u16);
        for &v in cfg.seeds(c) {
            sim.push_seed(v, c);
        }
    }
    for &v in new_seeds {
        sim.push_seed(v, Cascade::NEW);
    }
}

/// One forward run of the diffusion process. Edge coin flips and random
/// activation choices come from a single stream seeded by `rng_seed`, in
/// ascending node order and then ascending out-edge order.
pub fn diffuse(g: &DirectedGraph, cfg: &CascadeConfig, new_seeds: &[NodeId], rng_seed: u64) -> Result<DiffusionState> {
    cfg.check_seeds(new_seeds)?;
    let mut sim = Simulator::new();
    let mut r = rng::stream_rng(rng_seed, Stream::Diffusion, 0);
    queue_seeds(&mut sim, cfg, new_seeds);
    sim.run(g, cfg.activation(), coin, &mut r, None)?;
    Ok(sim.snapshot(g.node_count()))
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct InfluenceEstimate {
    /// Mean number of nodes that end up active in the new cascade.
    pub mean: f64,
    pub stderr: f64,
    /// Mean number of nodes that do not.
    pub not_active_mean: f64,
    pub trials: usize,
}

const TRIAL_CHUNK: usize = 64;

/// Monte-Carlo estimate of the new cascade's expected influence. Trial `t`
/// runs on the stream `(rng_seed, Trials, t)`, so the estimate does not
/// depend on the number of workers.
pub fn estimate_influence(
    g: &DirectedGraph,
    cfg: &CascadeConfig,
    new_seeds: &[NodeId],
    trials: usize,
    rng_seed: u64,
) -> Result<InfluenceEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    cfg.check_seeds(new_seeds)?;
    let parts = par::map_chunks(0..trials, TRIAL_CHUNK, Simulator::new, |sim, range| -> Result<(u64, u128)> {
        let mut sum = 0u64;
        let mut sq = 0u128;
        for t in range {
            let mut r = rng::stream_rng(rng_seed, Stream::Trials, t as u64);
            queue_seeds(sim, cfg, new_seeds);
            sim.run(g, cfg.activation(), coin, &mut r, None)?;
            let c = sim.count(Cascade::NEW) as u64;
            sum += c;
            sq += (c as u128) * (c as u128);
        }
        Ok((sum, sq))
    });
    let (mut sum, mut sq) = (0u64, 0u128);
    for p in parts {
        let (s, q) = p?;
        sum += s;
        sq += q;
    }
    let t = trials as f64;
    let mean = sum as f64 / t;
    let stderr = if trials > 1 {
        let var = ((sq as f64) - t * mean * mean).max(0.0) / (t - 1.0);
        (var / t).sqrt()
    } else {
        0.0
    };
    Ok(InfluenceEstimate { mean, stderr, not_active_mean: g.node_count() as f64 - mean, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascades::ActivationRule;
    use proptest::prelude::*;

    fn competition(rule: ActivationRule) -> (DirectedGraph, CascadeConfig) {
        // a -> c, b -> c with a seeded by c1
        let g = DirectedGraph::from_edges(3, vec![(0, 2, 1.0), (1, 2, 1.0)]).unwrap();
        let spec = ActivationSpec::generate(rule, &g, 2, 3).unwrap();
        let cfg = CascadeConfig::new(&g, vec![("c1".into(), vec![0])], None, spec).unwrap();
        (g, cfg)
    }

    #[test]
    fn dominating_new_cascade_wins() {
        let (g, cfg) = competition(ActivationRule::Dominating);
        let s = diffuse(&g, &cfg, &[1], 0).unwrap();
        assert_eq!(s.state(2), Some(Cascade::NEW));
        assert_eq!(s.new_cascade_count(), 2);
        let est = estimate_influence(&g, &cfg, &[1], 50, 1).unwrap();
        assert_eq!((est.mean, est.stderr), (2.0, 0.0));
        assert_eq!(est.not_active_mean, 1.0);
    }

    #[test]
    fn dominated_new_cascade_loses() {
        let (g, cfg) = competition(ActivationRule::Dominated);
        let s = diffuse(&g, &cfg, &[1], 0).unwrap();
        assert_eq!(s.state(2), Some(Cascade(1)));
        assert_eq!(s.new_cascade_count(), 1);
        assert_eq!(s.time(2), Some(1));
    }

    #[test]
    fn single_cascade_path() {
        let g = DirectedGraph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let spec = ActivationSpec::generate(ActivationRule::CascadeOrder, &g, 1, 0).unwrap();
        let cfg = CascadeConfig::new(&g, vec![], None, spec).unwrap();
        let s = diffuse(&g, &cfg, &[0], 5).unwrap();
        assert_eq!(s.new_cascade_count(), 3);
        assert_eq!((s.time(0), s.time(1), s.time(2)), (Some(0), Some(1), Some(2)));
    }

    #[test]
    fn empty_seed_set() {
        let (g, cfg) = competition(ActivationRule::CascadeOrder);
        let est = estimate_influence(&g, &cfg, &[], 10, 0).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.not_active_mean, 3.0);
        assert!(estimate_influence(&g, &cfg, &[], 0, 0).is_err());
    }

    #[test]
    fn seed_overlap_resolved_at_time_zero() {
        let (g, cfg) = competition(ActivationRule::Dominated);
        let s = diffuse(&g, &cfg, &[0], 0).unwrap();
        assert_eq!(s.state(0), Some(Cascade(1)));
        let (g, cfg) = competition(ActivationRule::Dominating);
        let s = diffuse(&g, &cfg, &[0], 0).unwrap();
        assert_eq!(s.state(0), Some(Cascade::NEW));
        assert_eq!(s.state(2), Some(Cascade::NEW));
    }

    #[test]
    fn half_edge_matches_exact_value() {
        let g = DirectedGraph::from_edges(2, vec![(0, 1, 0.5)]).unwrap();
        let spec = ActivationSpec::generate(ActivationRule::CascadeOrder, &g, 1, 0).unwrap();
        let cfg = CascadeConfig::new(&g, vec![], None, spec).unwrap();
        let est = estimate_influence(&g, &cfg, &[0], 100_000, 17).unwrap();
        assert!((est.mean - 1.5).abs() <= 3.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn non_candidate_seed_rejected() {
        let g = DirectedGraph::from_edges(2, vec![(0, 1, 0.5)]).unwrap();
        let spec = ActivationSpec::generate(ActivationRule::CascadeOrder, &g, 1, 0).unwrap();
        let cfg = CascadeConfig::new(&g, vec![], Some(vec![1]), spec).unwrap();
        assert!(matches!(diffuse(&g, &cfg, &[0], 0), Err(Error::SeedNotCandidate(0))));
    }

    #[test]
    fn estimate_is_worker_independent() {
        let edges: Vec<_> = (0..200u32).flat_map(|i| [(i, (i * 7 + 1) % 200, 0.3), (i, (i + 3) % 200, 0.2)]).collect();
        let g = DirectedGraph::from_edges(200, edges).unwrap();
        let spec = ActivationSpec::generate(ActivationRule::Random, &g, 3, 4).unwrap();
        let cfg = CascadeConfig::new(&g, vec![("a".into(), vec![1, 2]), ("b".into(), vec![50])], None, spec).unwrap();
        let one = par::with_workers(1, || estimate_influence(&g, &cfg, &[3, 9], 500, 8).unwrap());
        let many = par::with_workers(4, || estimate_influence(&g, &cfg, &[3, 9], 500, 8).unwrap());
        assert_eq!(one, many);
    }

    fn arb_instance() -> impl Strategy<Value = (usize, Vec<(u32, u32)>, Vec<u32>, Vec<u32>, u64)> {
        (3usize..10).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec((0..n as u32, 0..n as u32), 1..25),
                proptest::collection::vec(0..n as u32, 0..3),
                proptest::collection::vec(0..n as u32, 0..3),
                any::<u64>(),
            )
        })
    }

    proptest! {
        // p = 1: activation round equals the shortest-path distance from the
        // nearest seed, and every non-seed winner was offered by an in-neighbor
        // activated one round earlier.
        #[test]
        fn rounds_and_winners((n, edges, c1, new, seed) in arb_instance(), rule_ix in 0usize..5) {
            let rules = [ActivationRule::CascadeOrder, ActivationRule::NeighborOrder,
                ActivationRule::Random, ActivationRule::Dominating, ActivationRule::Dominated];
            let g = DirectedGraph::from_edges(n, edges.iter().map(|&(u, v)| (u, v, 1.0))).unwrap();
            let spec = ActivationSpec::generate(rules[rule_ix], &g, 2, seed).unwrap();
            let cfg = CascadeConfig::new(&g, vec![("c1".into(), c1.clone())], None, spec).unwrap();
            let s = diffuse(&g, &cfg, &new, seed).unwrap();
            let mut dist = vec![u32::MAX; n];
            let mut queue = std::collections::VecDeque::new();
            for &v in c1.iter().chain(new.iter()) {
                if dist[v as usize] != 0 { dist[v as usize] = 0; queue.push_back(v); }
            }
            while let Some(u) = queue.pop_front() {
                for (v, _, _) in g.out_edges(u) {
                    if dist[v as usize] == u32::MAX { dist[v as usize] = dist[u as usize] + 1; queue.push_back(v); }
                }
            }
            for v in 0..n as NodeId {
                let expected = (dist[v as usize] != u32::MAX).then_some(dist[v as usize]);
                prop_assert_eq!(s.time(v), expected);
                match (s.time(v), s.state(v)) {
                    (Some(0), Some(c)) => {
                        let seeded_new = new.contains(&v);
                        let seeded_c1 = c1.contains(&v);
                        prop_assert!((c == Cascade::NEW && seeded_new) || (c == Cascade(1) && seeded_c1));
                    }
                    (Some(t), Some(c)) => {
                        prop_assert!(g.in_edges(v).any(|(u, _, _)| s.time(u) == Some(t - 1) && s.state(u) == Some(c)));
                    }
                    (None, None) => {}
                    other => prop_assert!(false, "inconsistent state {:?}", other),
                }
            }
        }
    }
}
