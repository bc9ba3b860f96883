//! Per-candidate context graphs and the graph association score.
//!
//! A candidate graph is a star: the highest-weight node is the core theme
//! and every other node hangs off it by a single edge carrying the leaf's
//! weight. Nodes are either MCQ-derived features or text context terms.

mod export;
mod features;
mod matching;

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;

pub use export::GraphDocument;
pub use features::{derive_features, FeatureSpec, Features, Formula, McqRow, Predicate};
pub use matching::{gam_similarity, match_nodes, NodeCorrespondence};

use crate::error::{Error, Result};
use crate::text::ContextVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Feature,
    Term,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub id: String,
    /// Non-negative; for features this is the magnitude of the raw value.
    pub weight: f64,
    pub kind: NodeKind,
    /// Set when a feature's raw value was negative.
    pub negative: bool,
}

impl Node {
    /// The raw (signed) value the node was built from.
    pub fn signed_weight(&self) -> f64 {
        if self.negative {
            -self.weight
        } else {
            self.weight
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGraph {
    nodes: Vec<Node>,
    core: usize,
}

impl CandidateGraph {
    /// Builds a star graph from explicit nodes. Fails on an empty node set,
    /// duplicate ids, or negative / non-finite weights.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.id.as_str()) {
                return Err(Error::Input(format!("duplicate graph node `{}`", n.id)));
            }
            if !(n.weight.is_finite() && n.weight >= 0.0) {
                return Err(Error::Input(format!(
                    "node `{}` has invalid weight {}",
                    n.id, n.weight
                )));
            }
        }
        let core = rank_order(&nodes)[0];
        Ok(Self { nodes, core })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn core(&self) -> &Node {
        &self.nodes[self.core]
    }

    pub fn core_index(&self) -> usize {
        self.core
    }

    /// Star edges `(core id, leaf id, leaf weight)` in node order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        let core = self.core().id.as_str();
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != self.core)
            .map(move |(_, n)| (core, n.id.as_str(), n.weight))
    }

    /// Position of each node in the weight ranking (0 = core).
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.nodes.len()];
        for (r, i) in rank_order(&self.nodes).into_iter().enumerate() {
            ranks[i] = r;
        }
        ranks
    }

    /// Node weights divided by the graph total. A graph whose weights are all
    /// zero is treated as uniform.
    pub fn normalized_weights(&self) -> Vec<f64> {
        // sum in rank order so the total does not depend on insertion order
        let total: f64 = rank_order(&self.nodes)
            .into_iter()
            .map(|i| self.nodes[i].weight)
            .sum();
        if total > 0.0 {
            self.nodes.iter().map(|n| n.weight / total).collect()
        } else {
            vec![1.0 / self.nodes.len() as f64; self.nodes.len()]
        }
    }

    /// Same node set with equal weights, ignoring order.
    pub fn same_nodes(&self, other: &CandidateGraph) -> bool {
        if self.len() != other.len() {
            return false;
        }
        fn key(g: &CandidateGraph) -> Vec<(&str, u64, bool)> {
            let mut v: Vec<(&str, u64, bool)> = g
                .nodes
                .iter()
                .map(|n| (n.id.as_str(), n.weight.to_bits(), n.negative))
                .collect();
            v.sort();
            v
        }
        key(self) == key(other)
    }
}

/// Node indices sorted by weight descending, ties by id.
fn rank_order(nodes: &[Node]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..nodes.len()).collect();
    idx.sort_by(|&a, &b| {
        nodes[b]
            .weight
            .total_cmp(&nodes[a].weight)
            .then_with(|| nodes[a].id.cmp(&nodes[b].id))
    });
    idx
}

/// The maximum-weight node; ties go to the lexicographically smallest id.
pub fn core_theme<'a, I>(nodes: I) -> Result<String>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let mut best: Option<(&str, f64)> = None;
    for (id, w) in nodes {
        best = match best {
            None => Some((id, w)),
            Some((bid, bw)) if w > bw || (w == bw && id < bid) => Some((id, w)),
            keep => keep,
        };
    }
    best.map(|(id, _)| id.to_string())
        .ok_or_else(|| Error::Input("core theme of an empty node set".into()))
}

/// One node per feature (weight = |value|, sign kept as an attribute) followed
/// by one node per context term (weight = score).
pub fn build_graph(features: &Features, ctx: &ContextVector) -> Result<CandidateGraph> {
    if features.is_empty() && ctx.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut nodes = Vec::with_capacity(features.len() + ctx.len());
    for (name, w) in &features.0 {
        if !w.is_finite() {
            return Err(Error::Input(format!("feature `{name}` is not finite")));
        }
        nodes.push(Node {
            id: name.clone(),
            weight: w.abs(),
            kind: NodeKind::Feature,
            negative: *w < 0.0,
        });
    }
    for (term, score) in ctx.entries() {
        nodes.push(Node {
            id: term.clone(),
            weight: *score,
            kind: NodeKind::Term,
            negative: false,
        });
    }
    CandidateGraph::from_nodes(nodes)
}

/// Outer product `W fᵀ` of a weight column and a score row.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrix {
    weights: Vec<f64>,
    scores: Vec<f64>,
    data: Vec<f64>,
}

impl GraphMatrix {
    pub fn outer(weights: Vec<f64>, scores: Vec<f64>) -> Self {
        let data = weights
            .iter()
            .flat_map(|w| scores.iter().map(move |f| w * f))
            .collect();
        Self {
            weights,
            scores,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.weights.len()
    }

    pub fn cols(&self) -> usize {
        self.scores.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols().max(1)).map(<[f64]>::to_vec).collect()
    }

    /// CSV with node ids as header and row labels.
    pub fn write_csv<W: Write>(&self, labels: &[String], w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![String::from("node")];
        header.extend(labels.iter().cloned());
        out.write_record(&header)?;
        for (i, label) in labels.iter().enumerate().take(self.rows()) {
            let mut rec = vec![label.clone()];
            rec.extend((0..self.cols()).map(|j| self.get(i, j).to_string()));
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Node weights (magnitudes) against signed node values, in insertion order.
pub fn graph_matrix(g: &CandidateGraph) -> GraphMatrix {
    GraphMatrix::outer(
        g.nodes.iter().map(|n| n.weight).collect(),
        g.nodes.iter().map(Node::signed_weight).collect(),
    )
}
