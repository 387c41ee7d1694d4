//! Acceptance suite. Each test prints one `criterion N ...: PASS|FAIL` line.
//! Tests take a shared lock so timings are not distorted by each other.

use std::collections::VecDeque;
use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use mcim_core::baselines::run_maxinf;
use mcim_core::graph::assign_probabilities;
use mcim_core::oracle::{exact_influence, exact_optimal};
use mcim_core::sampling::CoverageIndex;
use mcim_core::solver::{
    greedy_max_coverage, naive_greedy_max_coverage, plan_sample_size, run_rs, sample_bounds, GREEDY_RATIO,
};
use mcim_core::validation::{ordering, probe_sets, singletons_and_pairs, unbiasedness};
use mcim_core::{
    par, ActivationRule, ActivationSpec, CascadeConfig, DirectedGraph, NodeId, ProbabilityScheme, SolverParams,
    TupleCollection,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Writes to the raw stderr handle, which the test harness does not capture.
fn report(id: u32, name: &str, pass: bool, detail: String) {
    let line = format!("criterion {id:>2} [{name}]: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    std::io::stderr().lock().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {id} failed: {detail}");
}

// ---------------------------------------------------------------- fixtures

struct Fixture {
    name: &'static str,
    g: DirectedGraph,
    cfg: CascadeConfig,
}

fn fixture(
    name: &'static str,
    n: usize,
    edges: &[(u32, u32, f64)],
    existing: &[&[NodeId]],
    rule: ActivationRule,
    seed: u64,
) -> Fixture {
    let g = DirectedGraph::from_edges(n, edges.iter().copied()).unwrap();
    let spec = ActivationSpec::generate(rule, &g, existing.len() + 1, seed).unwrap();
    let ex = existing.iter().enumerate().map(|(i, s)| (format!("c{}", i + 1), s.to_vec())).collect();
    let cfg = CascadeConfig::new(&g, ex, None, spec).unwrap();
    Fixture { name, g, cfg }
}

const RING: &[(u32, u32, f64)] = &[
    (0, 1, 0.6),
    (1, 2, 0.5),
    (2, 3, 0.7),
    (3, 4, 0.4),
    (4, 5, 0.6),
    (5, 0, 0.5),
    (0, 3, 0.3),
    (2, 5, 0.45),
    (6, 1, 0.8),
    (6, 4, 0.5),
    (7, 6, 0.6),
    (3, 7, 0.35),
];

const TREE: &[(u32, u32, f64)] = &[
    (0, 1, 0.7),
    (0, 2, 0.6),
    (1, 3, 0.5),
    (1, 4, 0.5),
    (2, 5, 0.8),
    (2, 6, 0.4),
    (3, 7, 0.6),
    (4, 7, 0.5),
    (5, 8, 0.7),
    (6, 9, 0.6),
    (8, 9, 0.3),
];

const DENSE: &[(u32, u32, f64)] = &[
    (0, 1, 0.5),
    (1, 0, 0.5),
    (1, 2, 0.5),
    (2, 1, 0.4),
    (2, 3, 0.6),
    (3, 2, 0.3),
    (3, 4, 0.5),
    (4, 0, 0.6),
    (0, 2, 0.4),
    (4, 2, 0.5),
    (5, 4, 0.9),
    (5, 0, 0.2),
];

fn fixtures() -> Vec<Fixture> {
    vec![
        fixture("ring/cascade_order", 8, RING, &[&[3], &[6]], ActivationRule::CascadeOrder, 1),
        fixture("tree/neighbor_order", 10, TREE, &[&[2]], ActivationRule::NeighborOrder, 2),
        fixture("dense/dominated", 6, DENSE, &[&[3]], ActivationRule::Dominated, 3),
        fixture("dense/dominating", 6, DENSE, &[&[3], &[5]], ActivationRule::Dominating, 4),
    ]
}

// ---------------------------------------------------------------- synthetic graphs

/// Preferential attachment: each new node links to `m` distinct earlier
/// nodes picked proportionally to degree; every link becomes two arcs.
fn power_law_graph(n: usize, m: usize, seed: u64) -> DirectedGraph {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut ends: Vec<u32> = Vec::with_capacity(2 * n * m);
    let mut edges = Vec::with_capacity(2 * n * m);
    for v in 0..=m as u32 {
        for u in 0..v {
            edges.push((u, v, 1.0));
            edges.push((v, u, 1.0));
            ends.push(u);
            ends.push(v);
        }
    }
    let mut picked = Vec::with_capacity(m);
    for v in (m as u32 + 1)..n as u32 {
        picked.clear();
        while picked.len() < m {
            let u = ends[r.random_range(0..ends.len())];
            if !picked.contains(&u) {
                picked.push(u);
            }
        }
        for &u in &picked {
            edges.push((u, v, 1.0));
            edges.push((v, u, 1.0));
            ends.push(u);
            ends.push(v);
        }
    }
    let g = DirectedGraph::from_edges(n, edges).unwrap();
    assign_probabilities(&g, &ProbabilityScheme::WeightedCascade).unwrap()
}

/// Plain independent-cascade Monte Carlo for a single cascade.
fn reference_ic(g: &DirectedGraph, seeds: &[NodeId], trials: usize, seed: u64) -> (f64, f64) {
    let n = g.node_count();
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut active = vec![0u32; n];
    let mut queue = VecDeque::new();
    let (mut sum, mut sq) = (0f64, 0f64);
    for t in 1..=trials as u32 {
        queue.clear();
        let mut count = 0usize;
        for &s in seeds {
            if active[s as usize] != t {
                active[s as usize] = t;
                queue.push_back(s);
                count += 1;
            }
        }
        while let Some(u) = queue.pop_front() {
            for (v, _, p) in g.out_edges(u) {
                if active[v as usize] != t && r.random::<f64>() < p {
                    active[v as usize] = t;
                    queue.push_back(v);
                    count += 1;
                }
            }
        }
        sum += count as f64;
        sq += (count * count) as f64;
    }
    let mean = sum / trials as f64;
    let var = (sq / trials as f64 - mean * mean).max(0.0);
    (mean, (var / trials as f64).sqrt())
}

fn with_fraction(g: &DirectedGraph, fraction: f64, rule: ActivationRule, seed: u64) -> CascadeConfig {
    let n = g.node_count();
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let count = ((fraction * n as f64).round() as usize).max(1);
    let seeds: Vec<NodeId> = sample(&mut r, n, count).into_iter().map(|v| v as NodeId).collect();
    let spec = ActivationSpec::generate(rule, g, 2, seed ^ 0x5eed).unwrap();
    CascadeConfig::new(g, vec![("c1".into(), seeds)], None, spec).unwrap()
}

fn no_competition(g: &DirectedGraph, seed: u64) -> CascadeConfig {
    let spec = ActivationSpec::generate(ActivationRule::CascadeOrder, g, 1, seed).unwrap();
    CascadeConfig::new(g, vec![], None, spec).unwrap()
}

// ---------------------------------------------------------------- criteria

#[test]
fn criterion_01_unbiasedness() {
    let _s = serial();
    let t = Instant::now();
    let mut rows = 0;
    let mut bad = Vec::new();
    let fx = fixtures();
    for (i, f) in fx.iter().take(3).enumerate() {
        assert!(f.g.node_count() <= 10 && f.g.edge_count() <= 12);
        let coll = TupleCollection::generate(&f.g, &f.cfg, 100_000, 100 + i as u64);
        let sets = probe_sets(&f.g, &f.cfg, 6);
        assert!(sets.len() >= 5);
        for r in unbiasedness(&f.g, &f.cfg, &coll, &sets).unwrap() {
            rows += 1;
            if !r.within(3.0) {
                bad.push(format!("{} {:?}: {:.4} vs {:.4} (se {:.4})", f.name, r.seeds, r.estimate, r.exact, r.stderr));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    report(
        1,
        "unbiasedness",
        bad.is_empty() && secs < 60.0,
        format!("{} of {rows} sets within 3 se over 3 fixtures, {secs:.1}s {bad:?}", rows - bad.len()),
    );
}

#[test]
fn criterion_02_sandwich_ordering() {
    let _s = serial();
    let mut evals = 0;
    let mut violations = 0;
    for (i, f) in fixtures().iter().enumerate() {
        let coll = TupleCollection::generate(&f.g, &f.cfg, 100_000, 200 + i as u64);
        let c = ordering(&f.g, &f.cfg, &coll, &singletons_and_pairs(&f.cfg)).unwrap();
        evals += c.evaluations;
        violations += c.ordering;
    }
    report(2, "sandwich ordering", violations == 0, format!("{violations} violations in {evals} evaluations"));
}

#[test]
fn criterion_03_tightness() {
    let _s = serial();
    let fx = fixtures();
    let sub = fx.iter().find(|f| f.name == "dense/dominated").unwrap();
    let dom = fx.iter().find(|f| f.name == "dense/dominating").unwrap();
    let ring_dom = fixture("ring/dominating", 8, RING, &[&[3], &[6]], ActivationRule::Dominating, 5);
    let ring_sub = fixture("ring/dominated", 8, RING, &[&[3], &[6]], ActivationRule::Dominated, 6);
    let mut upper = 0;
    let mut lower = 0;
    let mut evals = 0;
    for (f, seed) in [(dom, 300), (&ring_dom, 301)] {
        let coll = TupleCollection::generate(&f.g, &f.cfg, 100_000, seed);
        let c = ordering(&f.g, &f.cfg, &coll, &singletons_and_pairs(&f.cfg)).unwrap();
        upper += c.upper_mismatch;
        evals += c.evaluations;
    }
    for (f, seed) in [(sub, 302), (&ring_sub, 303)] {
        let coll = TupleCollection::generate(&f.g, &f.cfg, 100_000, seed);
        let c = ordering(&f.g, &f.cfg, &coll, &singletons_and_pairs(&f.cfg)).unwrap();
        lower += c.lower_mismatch;
        evals += c.evaluations;
    }
    report(
        3,
        "tightness",
        upper == 0 && lower == 0,
        format!("dominating: upper != g in {upper}; dominated: lower != g in {lower}; {evals} evaluations"),
    );
}

#[test]
fn criterion_04_degeneration() {
    let _s = serial();
    let g = power_law_graph(10_000, 3, 44);
    let cfg = no_competition(&g, 1);
    let coll = TupleCollection::generate(&g, &cfg, 50_000, 7);
    let split = (0..coll.len()).filter(|&i| coll.upper_of(i) != coll.lower_of(i)).count();
    let params = SolverParams::unified(20, 0.3, 100.0).with_seed(9);
    let r = run_rs(&g, &cfg, &params).unwrap();
    let gamma = r.gamma_lower.unwrap();
    let (mc, se) = reference_ic(&g, &r.seeds, 5000, 17);
    let core = mcim_core::cascades::estimate_influence(&g, &cfg, &r.seeds, 5000, 18).unwrap();
    let est_gap = (r.estimate - mc).abs() / mc;
    let mc_gap = (core.mean - mc).abs() / mc;
    report(
        4,
        "degeneration",
        split == 0 && gamma == GREEDY_RATIO && est_gap <= 0.05 && mc_gap <= 0.05,
        format!(
            "{split} split tuples; gamma {gamma}; RS estimate {:.1} vs reference IC {mc:.1} +- {se:.1} ({:.2}%); \
             forward simulator {:.1} ({:.2}%)",
            r.estimate,
            100.0 * est_gap,
            core.mean,
            100.0 * mc_gap
        ),
    );
}

fn exhaustive_coverage(sets_of: &[Vec<u32>], universe: usize, k: usize) -> usize {
    let c = sets_of.len();
    let mut best = 0;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut hit = vec![false; universe];
        for &i in &idx {
            for &t in &sets_of[i] {
                hit[t as usize] = true;
            }
        }
        best = best.max(hit.iter().filter(|&&h| h).count());
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < c - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[test]
fn criterion_05_greedy_quality() {
    let _s = serial();
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    let mut mismatches = 0;
    let instances = 300;
    for _ in 0..instances {
        let nodes = r.random_range(4..=14usize);
        let k = r.random_range(1..=nodes.min(5));
        let binom: u64 = (0..k as u64).fold(1, |a, i| a * (nodes as u64 - i) / (i + 1));
        assert!(binom <= 10_000);
        let universe = r.random_range(5..60usize);
        let sets: Vec<Vec<NodeId>> = (0..universe)
            .map(|_| {
                let size = r.random_range(1..=4.min(nodes));
                sample(&mut r, nodes, size).into_iter().map(|v| v as NodeId).collect()
            })
            .collect();
        let index = CoverageIndex::from_sets(nodes, sets.iter().map(|s| s.as_slice()));
        let cands: Vec<NodeId> = (0..nodes as NodeId).collect();
        let lazy = greedy_max_coverage(&index, k, &cands).unwrap();
        let naive = naive_greedy_max_coverage(&index, k, &cands).unwrap();
        mismatches += (lazy != naive) as usize;
        let sets_of: Vec<Vec<u32>> = (0..nodes as NodeId).map(|v| index.sets_of(v).to_vec()).collect();
        let opt = exhaustive_coverage(&sets_of, universe, k);
        let got = index.covered(&lazy);
        worst = worst.min(got as f64 / opt as f64);
    }
    report(
        5,
        "greedy quality",
        worst >= GREEDY_RATIO && mismatches == 0,
        format!("{instances} instances, worst greedy/optimum {worst:.4}, lazy/naive mismatches {mismatches}"),
    );
}

#[test]
fn criterion_06_sample_size_plan() {
    let _s = serial();
    let p = SolverParams::explicit(2, 0.5, 0.5, 0.5, 100.0);
    let (l1, l2) = sample_bounds(10, 2, &p);
    // C(10, 2) = 45
    let want1 = 10.0 * (45f64.ln() + 100f64.ln()) * (2.0 + 0.5) / 0.25;
    let want2 = 2.0 * 10.0 * 100f64.ln() / 0.25;
    let sig6 = |a: f64, b: f64| ((a - b) / b).abs() < 5e-7;
    let plan = plan_sample_size(10, 2, &p, 1.0).unwrap();
    let pass = sig6(l1, want1) && sig6(l2, want2) && (l1 - 841.18).abs() < 0.005 && (l2 - 368.41).abs() < 0.005;
    report(
        6,
        "sample-size plan",
        pass && plan.l == 842,
        format!("l1 = {l1:.6} (want {want1:.6}), l2 = {l2:.6} (want {want2:.6}), l at f_lo = 1: {}", plan.l),
    );
}

#[test]
fn criterion_07_end_to_end_approximation() {
    let _s = serial();
    let f = fixture("ring/cascade_order", 8, RING, &[&[3], &[6]], ActivationRule::CascadeOrder, 1);
    let eps = 0.3;
    let (opt_set, opt) = exact_optimal(&f.g, &f.cfg, 2).unwrap();
    let runs = 200;
    let mut ok = 0;
    let mut worst = f64::INFINITY;
    for s in 0..runs {
        let params = SolverParams::unified(2, eps, 10.0).with_seed(1000 + s);
        let r = run_rs(&f.g, &f.cfg, &params).unwrap();
        let value = exact_influence(&f.g, &f.cfg, &r.seeds).unwrap();
        let bound = ((1.0 - eps) * r.gamma_lower.unwrap() - eps) * opt;
        ok += (value >= bound) as u64;
        worst = worst.min(value / opt);
    }
    let rate = ok as f64 / runs as f64;
    report(
        7,
        "end-to-end approximation",
        rate >= 0.9,
        format!("{ok}/{runs} runs meet the bound; optimum {opt_set:?} = {opt:.4}; worst ratio {worst:.4}"),
    );
}

#[test]
fn criterion_08_competition_trend() {
    let _s = serial();
    let g = power_law_graph(10_000, 3, 88);
    let fractions = [0.01, 0.05, 0.10];
    let mut medians = Vec::new();
    let mut all = Vec::new();
    for (fi, &frac) in fractions.iter().enumerate() {
        let mut ratios = Vec::new();
        for rep in 0..5u64 {
            let cfg = with_fraction(&g, frac, ActivationRule::CascadeOrder, 10 * fi as u64 + rep);
            let params = SolverParams::unified(20, 0.3, 100.0).with_seed(rep).with_eval_trials(2000);
            let rs = run_rs(&g, &cfg, &params).unwrap();
            let mi = run_maxinf(&g, &cfg, &params).unwrap();
            ratios.push(mi.influence.unwrap().mean / rs.influence.unwrap().mean);
        }
        ratios.sort_by(f64::total_cmp);
        medians.push(ratios[2]);
        all.push(ratios);
    }
    let inversions = (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).filter(|&(i, j)| medians[i] < medians[j]).count();
    report(
        8,
        "competition trend",
        inversions <= 1,
        format!("median MaxInf/RS at 1%, 5%, 10%: {medians:.4?}; {inversions} inversions; runs {all:.3?}"),
    );
}

#[test]
fn criterion_09_performance_envelope() {
    let _s = serial();
    let g = power_law_graph(100_100, 5, 99);
    assert!(g.edge_count() >= 1_000_000);
    let cfg = with_fraction(&g, 0.01, ActivationRule::CascadeOrder, 3);

    let params = SolverParams::unified(50, 0.3, 1e4).with_seed(1);
    let t = Instant::now();
    let r = run_rs(&g, &cfg, &params).unwrap();
    let solve = t.elapsed().as_secs_f64();

    let tuples = 200_000;
    let time = |threads: usize| {
        par::with_workers(threads, || {
            let t = Instant::now();
            let c = TupleCollection::generate(&g, &cfg, tuples, 5);
            (t.elapsed().as_secs_f64(), c.total_size())
        })
    };
    let (t1, s1) = time(1);
    let (t4, s4) = time(4);
    assert_eq!(s1, s4);
    let speedup = t1 / t4;
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    report(
        9,
        "performance envelope",
        solve < 600.0 && speedup >= 2.5,
        format!(
            "RS on {} nodes / {} edges, k = 50, l = {}: {solve:.1}s; {tuples} tuples with 1 worker {t1:.2}s, \
             4 workers {t4:.2}s, speedup {speedup:.2} on {cores} available core(s)",
            g.node_count(),
            g.edge_count(),
            r.l
        ),
    );
}

#[test]
fn criterion_10_reproducibility() {
    let _s = serial();
    let g = power_law_graph(2_000, 3, 10);
    let cfg = with_fraction(&g, 0.05, ActivationRule::Random, 2);
    let params = SolverParams::unified(10, 0.3, 100.0).with_seed(77);
    let a = run_rs(&g, &cfg, &params).unwrap();
    let b = run_rs(&g, &cfg, &params).unwrap();
    let c = par::with_workers(2, || run_rs(&g, &cfg, &params).unwrap());
    let same = |x: &mcim_core::SolverReport, y: &mcim_core::SolverReport| {
        x.seeds == y.seeds && x.l == y.l && x.f_lo == y.f_lo && x.gamma_lower == y.gamma_lower
    };
    report(
        10,
        "reproducibility",
        same(&a, &b) && same(&a, &c),
        format!("seeds {:?}, l {}, f_lo {:.4}, gamma {:.6}", a.seeds, a.l, a.f_lo, a.gamma_lower.unwrap()),
    );
}
