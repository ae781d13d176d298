use std::fmt::Write;

use super::{VnfGraph, VnfNodeKind};
use crate::rational::format_rational;

/// DOT rendering: nodes labelled with id and function, edges with `d_req`.
pub fn to_dot(graph: &VnfGraph) -> String {
    let mut out = String::from("digraph vnf {\n  rankdir=LR;\n");
    for (i, n) in graph.nodes.iter().enumerate() {
        let label = graph.node_label(i);
        let (shape, detail) = match &n.kind {
            VnfNodeKind::Use { function, .. } => ("box", function.clone()),
            VnfNodeKind::Endpoint { location } => ("ellipse", format!("@{location}")),
        };
        writeln!(out, "  \"{label}\" [shape={shape}, label=\"{label}\\n{detail}\"];").unwrap();
    }
    for e in &graph.edges {
        writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            graph.node_label(e.from),
            graph.node_label(e.to),
            format_rational(&e.rate)
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
