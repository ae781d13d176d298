//! Expansion of parsed chaining requests into VNF graphs.
//!
//! A request whose chain contains orderable modules (optional-order modules
//! and parallel preambles) yields one graph per combination of module
//! permutations, or a single graph when the ascending-ratio heuristic is
//! used. Graphs of different requests are merged with [`combine`] before
//! placement.

mod dot;
mod expand;
mod paths;

use std::collections::HashSet;

use num_traits::Zero;
use serde::Serialize;

use crate::rational::{self, Rational};

pub use dot::to_dot;
pub use expand::{
    combination_count, expand_all, expand_heuristic, expand_with_choices, heuristic_choices, orderable_sizes,
    ExpansionSet, EXPANSION_LIMIT,
};
pub use paths::{enumerate_paths, topological_order};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExpansionError {
    #[error("symbol `{0}` is not declared by the request")]
    UnknownSymbol(String),
    #[error("use `{name}` declares {found} ratio(s) but has {expected} outgoing branch(es)")]
    RatioMismatch { name: String, expected: usize, found: usize },
    #[error("use `{0}` has multiple ratios and cannot appear in an orderable module")]
    SplitterInOrderable(String),
    #[error("endpoint `{0}` cannot appear in an orderable module")]
    EndpointInOrderable(String),
    #[error("endpoint `{0}` cannot split flows")]
    EndpointSplitter(String),
    #[error("use `{0}` has no outgoing edge")]
    DanglingUse(String),
    #[error("use `{0}` appears more than once in the chain")]
    DuplicateUse(String),
    #[error("use `{0}` is declared but never referenced by the chain")]
    UnusedUse(String),
    #[error("duplicate edge ({0},{1})")]
    DuplicateEdge(String, String),
    #[error("chain graph contains a cycle through `{0}`")]
    Cycle(String),
    #[error("no path between endpoints `{0}` and `{1}`")]
    NoPath(String, String),
    #[error("{count} combinations exceed the enumeration limit of {limit}")]
    TooManyCombinations { count: String, limit: u64 },
    #[error("request `{0}` appears more than once")]
    DuplicateRequest(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VnfNodeKind {
    Use {
        function: String,
        #[serde(with = "rational::serde_vec")]
        ratios: Vec<Rational>,
    },
    Endpoint {
        location: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VnfNode {
    /// Node id within its request; replicas carry a `#k` suffix.
    pub name: String,
    /// The declared use or endpoint this node was created from.
    pub origin: String,
    /// Index into [`VnfGraph::requests`].
    pub request: usize,
    #[serde(flatten)]
    pub kind: VnfNodeKind,
}

impl VnfNode {
    pub fn is_endpoint(&self) -> bool {
        matches!(self.kind, VnfNodeKind::Endpoint { .. })
    }

    pub fn function(&self) -> Option<&str> {
        match &self.kind {
            VnfNodeKind::Use { function, .. } => Some(function),
            VnfNodeKind::Endpoint { .. } => None,
        }
    }

    pub fn location(&self) -> Option<&str> {
        match &self.kind {
            VnfNodeKind::Endpoint { location } => Some(location),
            VnfNodeKind::Use { .. } => None,
        }
    }

    /// Outgoing-to-incoming rate ratio summed over branches; endpoints pass flows through.
    pub fn total_ratio(&self) -> Rational {
        match &self.kind {
            VnfNodeKind::Use { ratios, .. } => ratios.iter().sum(),
            VnfNodeKind::Endpoint { .. } => Rational::from_integer(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VnfEdge {
    pub from: usize,
    pub to: usize,
    /// Required data rate `d_req(u,u')`.
    #[serde(with = "rational::serde_str")]
    pub rate: Rational,
    /// Which ratio of `from` feeds this edge.
    pub branch: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairPaths {
    pub src: usize,
    pub dst: usize,
    #[serde(serialize_with = "serialize_opt_rational")]
    pub bound: Option<Rational>,
    /// Every simple path from `src` to `dst` as a list of edge indices.
    pub paths: Vec<Vec<usize>>,
}

fn serialize_opt_rational<S: serde::Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_str(&rational::format_rational(r)),
        None => s.serialize_none(),
    }
}

/// Expanded directed acyclic graph of function uses and endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VnfGraph {
    pub requests: Vec<String>,
    pub nodes: Vec<VnfNode>,
    pub edges: Vec<VnfEdge>,
    pub pairs: Vec<PairPaths>,
}

impl VnfGraph {
    /// Globally unique node label, `request/name`.
    pub fn node_label(&self, i: usize) -> String {
        let n = &self.nodes[i];
        format!("{}/{}", self.requests[n.request], n.name)
    }

    pub fn node_by_label(&self, label: &str) -> Option<usize> {
        (0..self.nodes.len()).find(|&i| self.node_label(i) == label)
    }

    pub fn edge_label(&self, e: usize) -> (String, String) {
        (self.node_label(self.edges[e].from), self.node_label(self.edges[e].to))
    }

    pub fn total_rate(&self) -> Rational {
        self.edges.iter().map(|e| e.rate).sum()
    }

    pub fn use_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_endpoint()).count()
    }

    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.from == v).map(|(i, _)| i)
    }

    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.to == v).map(|(i, _)| i)
    }

    /// Rate entering `v`, or `None` for sources.
    pub fn incoming_rate(&self, v: usize) -> Option<Rational> {
        let mut any = false;
        let mut sum = Rational::zero();
        for e in self.in_edges(v) {
            any = true;
            sum += self.edges[e].rate;
        }
        any.then_some(sum)
    }
}

/// Disjoint union of graphs from distinct requests.
pub fn combine(graphs: &[VnfGraph]) -> Result<VnfGraph, ExpansionError> {
    let mut out = VnfGraph { requests: Vec::new(), nodes: Vec::new(), edges: Vec::new(), pairs: Vec::new() };
    let mut seen = HashSet::new();
    for g in graphs {
        for r in &g.requests {
            if !seen.insert(r.clone()) {
                return Err(ExpansionError::DuplicateRequest(r.clone()));
            }
        }
        let (req_off, node_off, edge_off) = (out.requests.len(), out.nodes.len(), out.edges.len());
        out.requests.extend(g.requests.iter().cloned());
        out.nodes.extend(g.nodes.iter().map(|n| VnfNode { request: n.request + req_off, ..n.clone() }));
        out.edges.extend(g.edges.iter().map(|e| VnfEdge { from: e.from + node_off, to: e.to + node_off, ..e.clone() }));
        out.pairs.extend(g.pairs.iter().map(|p| PairPaths {
            src: p.src + node_off,
            dst: p.dst + node_off,
            bound: p.bound,
            paths: p.paths.iter().map(|path| path.iter().map(|e| e + edge_off).collect()).collect(),
        }));
    }
    Ok(out)
}
