//! Directed graph with per-edge propagation probabilities.
//!
//! Nodes are dense indices `0..n` assigned in order of first appearance in
//! the edge list; the original labels are kept for reporting. Edges are
//! stored in CSR form in both directions. The edge id of `(u, v)` is its
//! position in the out-adjacency, so out-edges of a node are ordered by
//! target id.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;

pub type NodeId = u32;
pub type EdgeId = u32;

#[derive(Clone, Debug)]
pub struct DirectedGraph {
    labels: Vec<String>,
    label_index: HashMap<String, NodeId>,
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeId>,
    prob: Vec<f64>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
    in_edges: Vec<EdgeId>,
    explicit_probabilities: bool,
}

impl DirectedGraph {
    /// Builds a graph from `(source, target, probability)` triples over
    /// nodes `0..n`. Self-loops are dropped and duplicate pairs keep the
    /// first probability.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId, f64)>,
    ) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::build(labels, edges.into_iter().collect(), true)
    }

    fn build(labels: Vec<String>, raw: Vec<(NodeId, NodeId, f64)>, explicit: bool) -> Result<Self> {
        let n = labels.len();
        let mut seen = std::collections::HashSet::with_capacity(raw.len());
        let mut edges = Vec::with_capacity(raw.len());
        for (u, v, p) in raw {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidParameter(format!("edge ({u}, {v}) out of range for n={n}")));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidParameter(format!("probability {p} of ({u}, {v}) outside (0,1]")));
            }
            if u == v || !seen.insert((u, v)) {
                continue;
            }
            edges.push((u, v, p));
        }
        edges.sort_by_key(|&(u, v, _)| (u, v));

        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for &(u, v, _) in &edges {
            out_offsets[u as usize + 1] += 1;
            in_offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let out_targets = edges.iter().map(|e| e.1).collect();
        let prob = edges.iter().map(|e| e.2).collect();
        let mut fill = in_offsets.clone();
        let mut in_sources = vec![0; edges.len()];
        let mut in_edges = vec![0; edges.len()];
        for (id, &(u, v, _)) in edges.iter().enumerate() {
            let slot = &mut fill[v as usize];
            in_sources[*slot] = u;
            in_edges[*slot] = id as EdgeId;
            *slot += 1;
        }
        let label_index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as NodeId))
            .collect();
        Ok(DirectedGraph {
            labels,
            label_index,
            out_offsets,
            out_targets,
            prob,
            in_offsets,
            in_sources,
            in_edges,
            explicit_probabilities: explicit,
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_of(&self, label: &str) -> Option<NodeId> {
        self.label_index.get(label).copied()
    }

    /// Out-edges of `u` as `(target, edge id, probability)`, ascending target.
    pub fn out_edges(&self, u: NodeId) -> impl Iterator<Item = (NodeId, EdgeId, f64)> + '_ {
        let r = self.out_offsets[u as usize]..self.out_offsets[u as usize + 1];
        r.map(move |e| (self.out_targets[e], e as EdgeId, self.prob[e]))
    }

    /// In-edges of `v` as `(source, edge id, probability)`, ascending source.
    pub fn in_edges(&self, v: NodeId) -> impl Iterator<Item = (NodeId, EdgeId, f64)> + '_ {
        let r = self.in_offsets[v as usize]..self.in_offsets[v as usize + 1];
        r.map(move |i| {
            let e = self.in_edges[i];
            (self.in_sources[i], e, self.prob[e as usize])
        })
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_offsets[v as usize + 1] - self.in_offsets[v as usize]
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_offsets[u as usize + 1] - self.out_offsets[u as usize]
    }

    /// `(source, target, probability)` of edge `e`.
    pub fn edge(&self, e: EdgeId) -> (NodeId, NodeId, f64) {
        let e = e as usize;
        let source = self.out_offsets.partition_point(|&off| off <= e) - 1;
        (source as NodeId, self.out_targets[e], self.prob[e])
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        (0..self.node_count() as NodeId)
            .flat_map(move |u| self.out_edges(u).map(move |(v, _, p)| (u, v, p)))
    }

    pub fn probability(&self, e: EdgeId) -> f64 {
        self.prob[e as usize]
    }

    /// Whether every edge line carried an explicit probability.
    pub fn has_explicit_probabilities(&self) -> bool {
        self.explicit_probabilities
    }

    /// Writes the graph as `u v p` lines using the original labels.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (u, v, p) in self.edges() {
            writeln!(out, "{} {} {}", self.label(u), self.label(v), p)?;
        }
        Ok(())
    }

    fn with_probabilities(&self, prob: Vec<f64>) -> Self {
        debug_assert_eq!(prob.len(), self.prob.len());
        DirectedGraph { prob, explicit_probabilities: true, ..self.clone() }
    }
}

/// Reads an edge list. Each non-comment line is `u v` or `u v p`; labels are
/// arbitrary tokens. With `directed = false` every line yields both
/// directions. Edges without a probability get `1.0` until a scheme is
/// assigned.
pub fn load_edge_list<R: BufRead>(source: R, directed: bool) -> Result<DirectedGraph> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, NodeId> = HashMap::new();
    let mut intern = |s: &str, labels: &mut Vec<String>| -> NodeId {
        if let Some(&id) = index.get(s) {
            return id;
        }
        let id = labels.len() as NodeId;
        index.insert(s.to_string(), id);
        labels.push(s.to_string());
        id
    };
    let mut raw = Vec::new();
    let mut explicit = true;
    let mut lines = 0usize;
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let p = match tokens.len() {
            2 => {
                explicit = false;
                1.0
            }
            3 => {
                let p: f64 = tokens[2].parse().map_err(|_| Error::MalformedLine {
                    line: lineno,
                    reason: format!("bad probability {:?}", tokens[2]),
                })?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::ProbabilityOutOfRange { line: lineno });
                }
                p
            }
            k => {
                return Err(Error::MalformedLine {
                    line: lineno,
                    reason: format!("expected 2 or 3 fields, found {k}"),
                })
            }
        };
        let u = intern(tokens[0], &mut labels);
        let v = intern(tokens[1], &mut labels);
        raw.push((u, v, p));
        if !directed {
            raw.push((v, u, p));
        }
        lines += 1;
    }
    if lines == 0 {
        return Err(Error::EmptyInput);
    }
    DirectedGraph::build(labels, raw, explicit)
}

/// Per-edge values keyed by `(source, target)`.
pub type EdgeWeights = HashMap<(NodeId, NodeId), f64>;

/// Reads `u v value` lines keyed by the graph's labels. Undirected input
/// applies each value to both directions.
pub fn load_edge_weights<R: BufRead>(source: R, g: &DirectedGraph, directed: bool) -> Result<EdgeWeights> {
    let mut out = EdgeWeights::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(Error::MalformedLine { line: i + 1, reason: "expected `u v value`".into() });
        }
        let lookup = |s: &str| g.node_of(s).ok_or_else(|| Error::UnknownLabel(s.to_string()));
        let (u, v) = (lookup(tokens[0])?, lookup(tokens[1])?);
        let w: f64 = tokens[2].parse().map_err(|_| Error::MalformedLine {
            line: i + 1,
            reason: format!("bad value {:?}", tokens[2]),
        })?;
        out.entry((u, v)).or_insert(w);
        if !directed {
            out.entry((v, u)).or_insert(w);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum ProbabilityScheme {
    Uniform(f64),
    WeightedCascade,
    /// `p = min(1, mean * x)` with `x ~ Exp(1)`, floored at machine epsilon.
    Exponential { mean: f64, seed: u64 },
    /// Probabilities from the edge list itself, or from an overlay table
    /// that must cover every edge.
    FromFile(Option<EdgeWeights>),
    /// Action counts per edge, normalized per target so the weights into a
    /// node sum to `min(1, raw sum)`. Edges absent from the table count once.
    FrequencyWeighted(EdgeWeights),
}

impl ProbabilityScheme {
    pub fn name(&self) -> &'static str {
        match self {
            ProbabilityScheme::Uniform(_) => "uniform",
            ProbabilityScheme::WeightedCascade => "weighted_cascade",
            ProbabilityScheme::Exponential { .. } => "exponential",
            ProbabilityScheme::FromFile(_) => "from_file",
            ProbabilityScheme::FrequencyWeighted(_) => "frequency_weighted",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ProbabilityScheme::Exponential { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

/// Graph summary included in run reports.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GraphSummary {
    pub n: usize,
    pub m: usize,
    pub scheme: String,
    pub seed: Option<u64>,
}

impl GraphSummary {
    pub fn new(g: &DirectedGraph, scheme: &ProbabilityScheme) -> Self {
        GraphSummary {
            n: g.node_count(),
            m: g.edge_count(),
            scheme: scheme.name().to_string(),
            seed: scheme.seed(),
        }
    }
}

pub fn assign_probabilities(g: &DirectedGraph, scheme: &ProbabilityScheme) -> Result<DirectedGraph> {
    let m = g.edge_count();
    let prob: Vec<f64> = match scheme {
        ProbabilityScheme::Uniform(p) => {
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(Error::InvalidParameter(format!("uniform probability {p} outside (0,1]")));
            }
            vec![*p; m]
        }
        ProbabilityScheme::WeightedCascade => g
            .edges()
            .map(|(_, v, _)| 1.0 / g.in_degree(v) as f64)
            .collect(),
        ProbabilityScheme::Exponential { mean, seed } => {
            if *mean <= 0.0 || !mean.is_finite() {
                return Err(Error::InvalidParameter(format!("exponential mean {mean} must be > 0")));
            }
            let mut r = rng::stream_rng(*seed, rng::Stream::Probabilities, 0);
            (0..m)
                .map(|_| {
                    let x: f64 = r.sample(Exp1);
                    (mean * x).clamp(f64::EPSILON, 1.0)
                })
                .collect()
        }
        ProbabilityScheme::FromFile(None) => {
            if !g.explicit_probabilities {
                let (u, v, _) = g.edges().next().expect("graph has edges");
                return Err(Error::MissingProbability {
                    source_label: g.label(u).into(),
                    target_label: g.label(v).into(),
                });
            }
            g.prob.clone()
        }
        ProbabilityScheme::FromFile(Some(table)) => g
            .edges()
            .map(|(u, v, _)| match table.get(&(u, v)) {
                Some(&p) if p > 0.0 && p <= 1.0 => Ok(p),
                Some(&p) => Err(Error::InvalidParameter(format!(
                    "probability {p} of {} -> {} outside (0,1]",
                    g.label(u),
                    g.label(v)
                ))),
                None => Err(Error::MissingProbability {
                    source_label: g.label(u).into(),
                    target_label: g.label(v).into(),
                }),
            })
            .collect::<Result<_>>()?,
        ProbabilityScheme::FrequencyWeighted(counts) => {
            let weight = |u: NodeId, v: NodeId| counts.get(&(u, v)).copied().unwrap_or(1.0);
            if let Some((&(u, v), w)) = counts.iter().find(|(_, w)| **w <= 0.0 || w.is_nan()) {
                return Err(Error::InvalidParameter(format!(
                    "frequency {w} of {} -> {} must be positive",
                    g.label(u),
                    g.label(v)
                )));
            }
            let mut total = vec![0.0f64; g.node_count()];
            for (u, v, _) in g.edges() {
                total[v as usize] += weight(u, v);
            }
            g.edges()
                .map(|(u, v, _)| weight(u, v) / total[v as usize].max(1.0))
                .collect()
        }
    };
    Ok(g.with_probabilities(prob))
}
