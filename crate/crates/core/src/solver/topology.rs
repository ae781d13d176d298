use std::sync::OnceLock;

use num_traits::Zero;

use crate::net_model::SubstrateNetwork;
use crate::rational::Rational;

/// A simple substrate path without self-loops, or a lone self-loop.
#[derive(Debug, Clone)]
pub(crate) struct PathOpt {
    pub edges: Vec<usize>,
    /// Non-self-loop edges on the path.
    pub hops: u32,
    pub latency: Rational,
}

/// Shortest distances and lazily enumerated simple paths of a network.
pub(crate) struct Topology<'a> {
    net: &'a SubstrateNetwork,
    n: usize,
    /// Hop distance over non-self-loop edges, 0 on the diagonal.
    pub hops: Vec<Vec<Option<u32>>>,
    /// Latency distance over non-self-loop edges, 0 on the diagonal.
    pub lat: Vec<Vec<Option<Rational>>>,
    pub self_loop: Vec<Option<usize>>,
    paths: Vec<OnceLock<Vec<PathOpt>>>,
}

impl<'a> Topology<'a> {
    pub fn new(net: &'a SubstrateNetwork) -> Self {
        let n = net.node_count();
        let mut hops = vec![vec![None; n]; n];
        let mut lat: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; n];
        for v in 0..n {
            hops[v][v] = Some(0);
            lat[v][v] = Some(Rational::zero());
        }
        for e in net.edges().iter().filter(|e| !e.is_self_loop()) {
            hops[e.src][e.dst] = Some(1);
            if lat[e.src][e.dst].is_none_or(|l| e.latency < l) {
                lat[e.src][e.dst] = Some(e.latency);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(a), Some(b)) = (hops[i][k], hops[k][j]) {
                        if hops[i][j].is_none_or(|c| a + b < c) {
                            hops[i][j] = Some(a + b);
                        }
                    }
                    if let (Some(a), Some(b)) = (lat[i][k], lat[k][j]) {
                        if lat[i][j].is_none_or(|c| a + b < c) {
                            lat[i][j] = Some(a + b);
                        }
                    }
                }
            }
        }
        let self_loop = (0..n).map(|v| net.self_loop(v)).collect();
        Topology { net, n, hops, lat, self_loop, paths: (0..n * n).map(|_| OnceLock::new()).collect() }
    }

    /// Latency of the cheapest route between the nodes of a mapped graph edge.
    pub fn exact_latency(&self, x: usize, y: usize) -> Option<Rational> {
        if x == y {
            self.self_loop[x].map(|e| self.net.edges()[e].latency)
        } else {
            self.lat[x][y]
        }
    }

    /// Fewest non-self-loop edges on a route between the nodes of a mapped graph edge.
    pub fn exact_hops(&self, x: usize, y: usize) -> Option<u32> {
        if x == y {
            self.self_loop[x].map(|_| 0)
        } else {
            self.hops[x][y]
        }
    }

    /// Every route option from `x` to `y`, sorted by hops, latency, then edges.
    pub fn paths(&self, x: usize, y: usize) -> &[PathOpt] {
        self.paths[x * self.n + y].get_or_init(|| self.enumerate(x, y))
    }

    fn enumerate(&self, x: usize, y: usize) -> Vec<PathOpt> {
        let net = self.net;
        let mut out = Vec::new();
        if x == y {
            if let Some(e) = self.self_loop[x] {
                out.push(PathOpt { edges: vec![e], hops: 0, latency: net.edges()[e].latency });
            }
            return out;
        }
        let out_edges: Vec<Vec<usize>> =
            (0..self.n).map(|v| net.out_edges(v).filter(|&e| !net.edges()[e].is_self_loop()).collect()).collect();
        let mut on_path = vec![false; self.n];
        let mut stack: Vec<usize> = Vec::new();
        fn dfs(
            v: usize,
            y: usize,
            net: &SubstrateNetwork,
            out_edges: &[Vec<usize>],
            on_path: &mut [bool],
            stack: &mut Vec<usize>,
            out: &mut Vec<PathOpt>,
        ) {
            if v == y {
                let latency = stack.iter().map(|&e| net.edges()[e].latency).sum();
                out.push(PathOpt { edges: stack.clone(), hops: stack.len() as u32, latency });
                return;
            }
            on_path[v] = true;
            for &e in &out_edges[v] {
                let w = net.edges()[e].dst;
                if !on_path[w] {
                    stack.push(e);
                    dfs(w, y, net, out_edges, on_path, stack, out);
                    stack.pop();
                }
            }
            on_path[v] = false;
        }
        dfs(x, y, net, &out_edges, &mut on_path, &mut stack, &mut out);
        out.sort_by(|a, b| (a.hops, a.latency, &a.edges).cmp(&(b.hops, b.latency, &b.edges)));
        out
    }
}
