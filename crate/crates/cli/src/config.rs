use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mcim_core::cascades::{ActivationTable, NEW_CASCADE_NAME};
use mcim_core::graph::{assign_probabilities, load_edge_list, load_edge_weights, GraphSummary};
use mcim_core::rng::{self, Stream};
use mcim_core::solver::{DEFAULT_K_MULT, DEFAULT_MAX_TUPLES};
use mcim_core::{
    ActivationRule, ActivationSpec, Algorithm, Cascade, CascadeConfig, DirectedGraph, NodeId, ProbabilityScheme,
    SolverParams,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphSection,
    #[serde(default)]
    pub probabilities: Option<ProbabilitySection>,
    #[serde(default)]
    pub cascades: Vec<CascadeSection>,
    #[serde(default)]
    pub activation: Option<ActivationSection>,
    #[serde(default)]
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub evaluate: Option<EvaluateSection>,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub candidates: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub path: PathBuf,
    #[serde(default = "yes")]
    pub directed: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProbabilitySection {
    pub scheme: String,
    pub p: Option<f64>,
    pub mean: Option<f64>,
    pub file: Option<PathBuf>,
    pub rng_seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeSection {
    pub name: String,
    pub seeds: Option<PathBuf>,
    pub seed_fraction: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationSection {
    #[serde(rename = "type")]
    pub kind: String,
    pub rng_seed: Option<u64>,
    #[serde(default)]
    pub table: Vec<TableEntry>,
}

/// One explicit activation entry; `node = None` applies to every node.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub node: Option<String>,
    pub offered: Vec<String>,
    pub winner: String,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub algorithm: Option<String>,
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub eps0: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    #[serde(rename = "N")]
    pub n_fail: Option<f64>,
    #[serde(rename = "K")]
    pub k_mult: Option<f64>,
    pub max_tuples: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    pub trials: Option<usize>,
}

pub const DEFAULT_TRIALS: usize = 1000;
const DEFAULT_EPSILON: f64 = 0.3;

/// A loaded instance ready to run.
pub struct Instance {
    pub config: RunConfig,
    pub graph: DirectedGraph,
    pub cascades: CascadeConfig,
    pub summary: GraphSummary,
    /// Seeds of each existing cascade, by label.
    pub existing: Vec<(String, Vec<String>)>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn trials(&self) -> usize {
        self.evaluate.as_ref().and_then(|e| e.trials).unwrap_or(DEFAULT_TRIALS)
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        match self.solver.as_ref().and_then(|s| s.algorithm.as_deref()) {
            None => Ok(Algorithm::Rs),
            Some(a) => Algorithm::parse(a).with_context(|| format!("unknown algorithm {a:?}")),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

/// Reads one label per line, skipping blank lines and `#` comments.
pub fn read_labels(path: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in open(path)?.lines() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            out.push(t.to_string());
        }
    }
    Ok(out)
}

pub fn nodes_of(g: &DirectedGraph, labels: &[String]) -> Result<Vec<NodeId>> {
    labels
        .iter()
        .map(|l| g.node_of(l).ok_or_else(|| mcim_core::Error::UnknownLabel(l.clone()).into()))
        .collect()
}

impl Instance {
    pub fn load(config: RunConfig, base: PathBuf) -> Result<Self> {
        let gpath = resolve(&base, &config.graph.path);
        let raw = load_edge_list(open(&gpath)?, config.graph.directed)
            .with_context(|| format!("loading graph {}", gpath.display()))?;
        let scheme = scheme(&config, &base, &raw)?;
        let graph = assign_probabilities(&raw, &scheme)?;
        let summary = GraphSummary::new(&graph, &scheme);
        let n = graph.node_count();

        let mut existing = Vec::new();
        let mut names = Vec::new();
        for (i, c) in config.cascades.iter().enumerate() {
            if c.name == NEW_CASCADE_NAME {
                bail!("cascade name {NEW_CASCADE_NAME:?} is reserved for the new cascade");
            }
            let seeds = match (&c.seeds, c.seed_fraction) {
                (Some(p), None) => nodes_of(&graph, &read_labels(&resolve(&base, p))?)?,
                (None, Some(f)) => {
                    if !(f > 0.0 && f <= 1.0) {
                        bail!("seed_fraction of {:?} must lie in (0, 1]", c.name);
                    }
                    let count = ((f * n as f64).round() as usize).clamp(1, n);
                    let mut r = rng::stream_rng(config.rng_seed, Stream::SeedSelection, i as u64);
                    let mut s: Vec<NodeId> =
                        rand::seq::index::sample(&mut r, n, count).into_iter().map(|v| v as NodeId).collect();
                    s.sort_unstable();
                    s
                }
                _ => bail!("cascade {:?} needs exactly one of seeds or seed_fraction", c.name),
            };
            names.push(c.name.clone());
            existing.push((c.name.clone(), seeds));
        }

        let spec = activation(&config, &graph, &names)?;
        let candidates = match config.candidates.as_deref() {
            None | Some("all") => None,
            Some(p) => Some(nodes_of(&graph, &read_labels(&resolve(&base, Path::new(p)))?)?),
        };
        let labelled = existing
            .iter()
            .map(|(name, s)| (name.clone(), s.iter().map(|&v| graph.label(v).to_string()).collect()))
            .collect();
        let cascades = CascadeConfig::new(&graph, existing, candidates, spec)?;
        Ok(Instance { config, graph, cascades, summary, existing: labelled })
    }

    /// Solver parameters for budget `k`, with `epsilon` split as
    /// `eps1 = eps2 = epsilon`, `eps0 = min(0.999, K * epsilon)` unless the
    /// three are given explicitly. `N` defaults to the node count.
    pub fn params(&self, k: usize) -> Result<SolverParams> {
        let s = self.config.solver.clone().unwrap_or_default();
        let n_fail = s.n_fail.unwrap_or((self.graph.node_count() as f64).max(2.0));
        let k_mult = s.k_mult.unwrap_or(DEFAULT_K_MULT);
        let eps = s.epsilon.unwrap_or(DEFAULT_EPSILON);
        let mut p = match (s.eps0, s.eps1, s.eps2) {
            (None, None, None) => SolverParams::unified_with_mult(k, eps, n_fail, k_mult),
            (Some(e0), Some(e1), Some(e2)) => SolverParams::explicit(k, e0, e1, e2, n_fail),
            _ => bail!("eps0, eps1 and eps2 must be given together"),
        };
        p.k_mult = k_mult;
        p = p
            .with_seed(self.config.rng_seed)
            .with_max_tuples(s.max_tuples.unwrap_or(DEFAULT_MAX_TUPLES))
            .with_eval_trials(self.config.trials());
        p.validate(&self.cascades)?;
        Ok(p)
    }

    pub fn budget(&self) -> Result<usize> {
        self.config.solver.as_ref().and_then(|s| s.k).context("solver.k is required")
    }
}

fn scheme(config: &RunConfig, base: &Path, raw: &DirectedGraph) -> Result<ProbabilityScheme> {
    let Some(p) = &config.probabilities else {
        return Ok(ProbabilityScheme::FromFile(None));
    };
    let weights = |required: bool| -> Result<_> {
        match &p.file {
            Some(f) => Ok(Some(load_edge_weights(open(&resolve(base, f))?, raw, config.graph.directed)?)),
            None if required => bail!("probabilities.file is required for {}", p.scheme),
            None => Ok(None),
        }
    };
    Ok(match p.scheme.as_str() {
        "uniform" => ProbabilityScheme::Uniform(p.p.context("probabilities.p is required for uniform")?),
        "weighted_cascade" => ProbabilityScheme::WeightedCascade,
        "exponential" => ProbabilityScheme::Exponential {
            mean: p.mean.context("probabilities.mean is required for exponential")?,
            seed: p.rng_seed.unwrap_or_else(|| rng::derive(config.rng_seed, Stream::Probabilities, 0)),
        },
        "from_file" => ProbabilityScheme::FromFile(weights(false)?),
        "frequency_weighted" => ProbabilityScheme::FrequencyWeighted(weights(true)?.unwrap_or_default()),
        other => bail!("unknown probability scheme {other:?}"),
    })
}

fn activation(config: &RunConfig, g: &DirectedGraph, names: &[String]) -> Result<ActivationSpec> {
    let a = config.activation.clone().unwrap_or(ActivationSection {
        kind: "cascade_order".into(),
        rng_seed: None,
        table: Vec::new(),
    });
    let rule = ActivationRule::parse(&a.kind).with_context(|| format!("unknown activation type {:?}", a.kind))?;
    let seed = a.rng_seed.unwrap_or_else(|| rng::derive(config.rng_seed, Stream::ActivationOrder, 0));
    let cascades = names.len() + 1;
    if rule != ActivationRule::ExplicitTable {
        if !a.table.is_empty() {
            bail!("activation.table is only used with explicit_table");
        }
        return Ok(ActivationSpec::generate(rule, g, cascades, seed)?);
    }
    let cascade = |name: &str| -> Result<Cascade> {
        if name == NEW_CASCADE_NAME {
            return Ok(Cascade::NEW);
        }
        let i = names.iter().position(|n| n == name).with_context(|| format!("unknown cascade {name:?}"))?;
        Ok(Cascade(i as u16 + 1))
    };
    let mut table = ActivationTable::new();
    for e in &a.table {
        let node = match &e.node {
            Some(l) => Some(g.node_of(l).ok_or_else(|| mcim_core::Error::UnknownLabel(l.clone()))?),
            None => None,
        };
        let offered = e.offered.iter().map(|c| cascade(c)).collect::<Result<Vec<_>>>()?;
        table.insert(node, &offered, cascade(&e.winner)?)?;
    }
    Ok(ActivationSpec::with_table(g, cascades, table, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(solver: serde_json::Value) -> Result<Instance> {
        let dir = std::env::temp_dir().join(format!("mcim-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("g.txt"), "a b\nb c\nc a\n")?;
        let cfg: RunConfig = serde_json::from_value(serde_json::json!({
            "graph": {"path": "g.txt"},
            "probabilities": {"scheme": "uniform", "p": 0.5},
            "solver": solver,
        }))?;
        Instance::load(cfg, dir)
    }

    #[test]
    fn unified_epsilon_is_split_and_capped() {
        let inst = instance(serde_json::json!({"k": 1, "epsilon": 0.2})).unwrap();
        let p = inst.params(1).unwrap();
        assert_eq!((p.eps1, p.eps2, p.eps0, p.k_mult), (0.2, 0.2, 0.999, 100.0));
        assert_eq!(p.n_fail, 3.0);
        let inst = instance(serde_json::json!({"k": 1, "epsilon": 0.002, "K": 50, "N": 20})).unwrap();
        let p = inst.params(1).unwrap();
        assert!((p.eps0 - 0.1).abs() < 1e-12);
        assert_eq!((p.k_mult, p.n_fail), (50.0, 20.0));
    }

    #[test]
    fn explicit_triple_must_be_complete() {
        let inst = instance(serde_json::json!({"k": 1, "eps0": 0.5, "eps1": 0.1})).unwrap();
        assert!(inst.params(1).is_err());
        let inst = instance(serde_json::json!({"k": 1, "eps0": 0.5, "eps1": 0.1, "eps2": 0.2})).unwrap();
        let p = inst.params(1).unwrap();
        assert_eq!((p.eps0, p.eps1, p.eps2), (0.5, 0.1, 0.2));
        assert!(inst.params(4).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad: std::result::Result<RunConfig, _> =
            serde_json::from_value(serde_json::json!({"graph": {"path": "g.txt", "weighted": true}}));
        assert!(bad.is_err());
    }
}
