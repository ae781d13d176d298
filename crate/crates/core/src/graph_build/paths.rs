use std::collections::VecDeque;

use super::{ExpansionError, PairPaths, VnfGraph};
use crate::rational::Rational;

/// Kahn order; ties resolved by node index so the result is deterministic.
pub fn topological_order(graph: &VnfGraph) -> Result<Vec<usize>, ExpansionError> {
    let n = graph.nodes.len();
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for e in &graph.edges {
        indeg[e.to] += 1;
        succ[e.from].push(e.to);
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&v| indeg[v] > 0).expect("a node is left on the cycle");
        return Err(ExpansionError::Cycle(graph.node_label(stuck)));
    }
    Ok(order)
}

fn simple_paths(graph: &VnfGraph, src: usize, dst: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![(src, graph.out_edges(src).collect::<Vec<_>>(), 0usize)];
    let mut path: Vec<usize> = Vec::new();
    let mut on_path = vec![false; graph.nodes.len()];
    on_path[src] = true;
    while let Some((_, edges, next)) = stack.last_mut() {
        if *next == edges.len() {
            let (v, _, _) = stack.pop().unwrap();
            on_path[v] = false;
            path.pop();
            continue;
        }
        let e = edges[*next];
        *next += 1;
        let w = graph.edges[e].to;
        if on_path[w] {
            continue;
        }
        if w == dst {
            let mut p = path.clone();
            p.push(e);
            out.push(p);
            continue;
        }
        path.push(e);
        on_path[w] = true;
        stack.push((w, graph.out_edges(w).collect(), 0));
    }
    out
}

/// Fills `graph.pairs` with every simple path of each endpoint pair, sorted
/// lexicographically by the node labels along the path.
pub fn enumerate_paths(graph: &mut VnfGraph, pairs: &[(usize, usize, Option<Rational>)]) -> Result<(), ExpansionError> {
    topological_order(graph)?;
    let mut filled = Vec::with_capacity(pairs.len());
    for &(src, dst, bound) in pairs {
        let mut paths = simple_paths(graph, src, dst);
        if paths.is_empty() {
            return Err(ExpansionError::NoPath(graph.node_label(src), graph.node_label(dst)));
        }
        let key = |p: &Vec<usize>| -> Vec<String> {
            std::iter::once(graph.node_label(src))
                .chain(p.iter().map(|&e| graph.node_label(graph.edges[e].to)))
                .collect()
        };
        paths.sort_by_cached_key(key);
        filled.push(PairPaths { src, dst, bound, paths });
    }
    graph.pairs = filled;
    Ok(())
}
