use std::fmt::Write as _;

use serde::Serialize;

use super::{CandidateGraph, Node};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl CandidateGraph {
    /// Graphviz rendering; the core node is drawn as a double circle and
    /// edges are labelled with leaf weights.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph {} {{", quote(name));
        for (i, n) in self.nodes.iter().enumerate() {
            let shape = if i == self.core { "doublecircle" } else { "ellipse" };
            let label = format!("{}\\n{}", n.id, n.signed_weight());
            let _ = writeln!(
                out,
                "  {} [shape={shape}, kind={:?}, label={}];",
                quote(&n.id),
                kind_name(n),
                quote(&label)
            );
        }
        for (core, leaf, w) in self.edges() {
            let _ = writeln!(out, "  {} -- {} [label=\"{w}\"];", quote(core), quote(leaf));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_document(&self) -> GraphDocument<'_> {
        GraphDocument {
            core: &self.core().id,
            nodes: &self.nodes,
            edges: self
                .edges()
                .map(|(source, target, weight)| EdgeDoc {
                    source,
                    target,
                    weight,
                })
                .collect(),
        }
    }
}

fn kind_name(n: &Node) -> &'static str {
    match n.kind {
        super::NodeKind::Feature => "feature",
        super::NodeKind::Term => "term",
    }
}

/// JSON adjacency form of a candidate graph.
#[derive(Debug, Serialize)]
pub struct GraphDocument<'a> {
    pub core: &'a str,
    pub nodes: &'a [Node],
    pub edges: Vec<EdgeDoc<'a>>,
}

#[derive(Debug, Serialize)]
pub struct EdgeDoc<'a> {
    pub source: &'a str,
    pub target: &'a str,
    pub weight: f64,
}
