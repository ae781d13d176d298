use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::context::ProblemContext;
use super::Objective;
use crate::rational::{self, Rational};

/// How a use is run on the node it is mapped to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Data-center function (`md = 1`).
    Dc,
    /// Switch function (`ms = 1`).
    Switch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveValues {
    #[serde(with = "rational::serde_str")]
    pub remdr: Rational,
    pub used_nodes: u32,
    #[serde(with = "rational::serde_str")]
    pub latency: Rational,
}

impl ObjectiveValues {
    pub fn metric(&self, m: Objective) -> Rational {
        match m {
            Objective::Remdr => self.remdr,
            Objective::UsedNodes => Rational::from_integer(self.used_nodes as i128),
            Objective::Latency => self.latency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub from: String,
    pub to: String,
    /// Substrate edges `(src, dst)` in walking order.
    pub edges: Vec<(String, String)>,
    #[serde(with = "rational::serde_str")]
    pub latency: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRemaining {
    pub src: String,
    pub dst: String,
    #[serde(with = "rational::serde_str")]
    pub remaining: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceAt {
    pub function: String,
    pub node: String,
}

/// A placement: node per graph node, role per use, route per graph edge, and
/// the metric values implied by them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementSolution {
    pub mapping: BTreeMap<String, String>,
    pub roles: BTreeMap<String, Role>,
    pub instances: Vec<InstanceAt>,
    pub routes: Vec<Route>,
    pub used_nodes: Vec<String>,
    pub remaining_rate: Vec<EdgeRemaining>,
    pub objective: ObjectiveValues,
}

impl PlacementSolution {
    /// Derives instances, used nodes and metrics from a mapping (per graph
    /// node), roles (per graph node, ignored for endpoints) and routes (per
    /// graph edge, as substrate edge indices).
    pub fn from_parts(ctx: &ProblemContext, mapping: &[usize], roles: &[Role], routes: &[Vec<usize>]) -> Self {
        let net = &ctx.net;
        let graph = &ctx.graph;
        let mut instance_set = BTreeSet::new();
        for &u in &ctx.uses {
            instance_set.insert((ctx.node_function[u].unwrap(), mapping[u]));
        }
        let used: BTreeSet<usize> = instance_set.iter().map(|&(_, v)| v).collect();

        let mut load = vec![Rational::zero(); net.edges().len()];
        let mut route_out = Vec::with_capacity(routes.len());
        let mut lat = Vec::with_capacity(routes.len());
        for (p, path) in routes.iter().enumerate() {
            let mut latency = Rational::zero();
            for &e in path {
                load[e] += ctx.dreq(p);
                latency += net.edges()[e].latency;
            }
            lat.push(latency);
            let (from, to) = graph.edge_label(p);
            route_out.push(Route { from, to, edges: path.iter().map(|&e| net.edge_label(e)).collect(), latency });
        }
        let remaining: Vec<Rational> = net.edges().iter().zip(&load).map(|(e, l)| e.rate - l).collect();
        let objective = objective_from(ctx, &remaining, used.len() as u32, &lat);

        PlacementSolution {
            mapping: (0..graph.nodes.len())
                .map(|u| (graph.node_label(u), net.node_id(mapping[u]).to_string()))
                .collect(),
            roles: ctx.uses.iter().map(|&u| (graph.node_label(u), roles[u])).collect(),
            instances: instance_set
                .iter()
                .map(|&(f, v)| InstanceAt {
                    function: ctx.catalog.functions()[f].id.clone(),
                    node: net.node_id(v).to_string(),
                })
                .collect(),
            routes: route_out,
            used_nodes: used.iter().map(|&v| net.node_id(v).to_string()).collect(),
            remaining_rate: net
                .edges()
                .iter()
                .zip(&remaining)
                .map(|(e, r)| EdgeRemaining {
                    src: net.node_id(e.src).to_string(),
                    dst: net.node_id(e.dst).to_string(),
                    remaining: *r,
                })
                .collect(),
            objective,
        }
    }

    /// Best-effort solution view of raw variable values. Graph nodes mapped
    /// nowhere are left out of `mapping`; run the checker to see what is wrong.
    pub fn from_assignment(ctx: &ProblemContext, a: &Assignment) -> Self {
        let net = &ctx.net;
        let graph = &ctx.graph;
        let first = |u: usize| a.m[u].iter().position(|&b| b);
        let mut mapping = BTreeMap::new();
        let mut roles = BTreeMap::new();
        for u in 0..graph.nodes.len() {
            let Some(v) = first(u) else { continue };
            mapping.insert(graph.node_label(u), net.node_id(v).to_string());
            if !ctx.is_endpoint(u) {
                let role = if a.md[u][v] { Role::Dc } else { Role::Switch };
                roles.insert(graph.node_label(u), role);
            }
        }
        let mut instances = Vec::new();
        for (f, row) in a.inst.iter().enumerate() {
            for (v, &on) in row.iter().enumerate() {
                if on {
                    instances.push(InstanceAt {
                        function: ctx.catalog.functions()[f].id.clone(),
                        node: net.node_id(v).to_string(),
                    });
                }
            }
        }
        let routes = (0..graph.edges.len())
            .map(|p| {
                let edge = &graph.edges[p];
                let edges: Vec<usize> = a.e[p].iter().map(|&(_, _, e)| e).collect();
                let ordered = match (first(edge.from), first(edge.to)) {
                    (Some(x), Some(y)) => order_walk(ctx, x, y, &edges),
                    _ => edges,
                };
                let (from, to) = graph.edge_label(p);
                Route { from, to, edges: ordered.iter().map(|&e| net.edge_label(e)).collect(), latency: a.lat[p] }
            })
            .collect();
        PlacementSolution {
            mapping,
            roles,
            instances,
            routes,
            used_nodes: (0..net.node_count()).filter(|&v| a.used[v]).map(|v| net.node_id(v).to_string()).collect(),
            remaining_rate: net
                .edges()
                .iter()
                .zip(&a.remdr)
                .map(|(e, r)| EdgeRemaining {
                    src: net.node_id(e.src).to_string(),
                    dst: net.node_id(e.dst).to_string(),
                    remaining: *r,
                })
                .collect(),
            objective: a.objective(ctx),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Orders a set of substrate edges as a walk from `x` to `y`. Edges the walk
/// does not reach (stray cycles) are appended in index order.
pub(crate) fn order_walk(ctx: &ProblemContext, x: usize, y: usize, edges: &[usize]) -> Vec<usize> {
    let net = &ctx.net;
    let mut left: Vec<usize> = edges.to_vec();
    left.sort_unstable();
    let mut out = Vec::with_capacity(left.len());
    if x == y {
        if let Some(pos) = left.iter().position(|&e| net.edges()[e].is_self_loop() && net.edges()[e].src == x) {
            out.push(left.remove(pos));
        }
    } else {
        let mut at = x;
        while at != y {
            let Some(pos) = left.iter().position(|&e| net.edges()[e].src == at && !net.edges()[e].is_self_loop())
            else {
                break;
            };
            let e = left.remove(pos);
            at = net.edges()[e].dst;
            out.push(e);
        }
    }
    out.extend(left);
    out
}

/// Metric values of raw variable values.
pub(crate) fn objective_from(ctx: &ProblemContext, remdr: &[Rational], used: u32, lat: &[Rational]) -> ObjectiveValues {
    let remdr_sum = ctx.net.edges().iter().zip(remdr).filter(|(e, _)| !e.is_self_loop()).map(|(_, r)| *r).sum();
    let latency = ctx.lat_coeff.iter().zip(lat).map(|(&c, l)| Rational::from_integer(c as i128) * l).sum();
    ObjectiveValues { remdr: remdr_sum, used_nodes: used, latency }
}

/// Values of every original decision variable, indexed like the context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// `m[u][v]` for every graph node.
    pub m: Vec<Vec<bool>>,
    /// `ms[u][v]`; rows of endpoints are ignored.
    pub ms: Vec<Vec<bool>>,
    pub md: Vec<Vec<bool>>,
    /// `i[f][v]` for every catalog function.
    pub inst: Vec<Vec<bool>>,
    /// Active `e` variables of each graph edge as `(x, y, substrate edge)`.
    pub e: Vec<BTreeSet<(usize, usize, usize)>>,
    pub used: Vec<bool>,
    pub remdr: Vec<Rational>,
    pub lat: Vec<Rational>,
}

impl Assignment {
    /// All-zero assignment (continuous values zero as well).
    pub fn zeros(ctx: &ProblemContext) -> Self {
        let (n, nv) = (ctx.graph.nodes.len(), ctx.net.node_count());
        Assignment {
            m: vec![vec![false; nv]; n],
            ms: vec![vec![false; nv]; n],
            md: vec![vec![false; nv]; n],
            inst: vec![vec![false; nv]; ctx.catalog.len()],
            e: vec![BTreeSet::new(); ctx.graph.edges.len()],
            used: vec![false; nv],
            remdr: vec![Rational::zero(); ctx.net.edges().len()],
            lat: vec![Rational::zero(); ctx.graph.edges.len()],
        }
    }

    /// The consistent assignment of a mapping, roles and routes.
    pub fn from_parts(ctx: &ProblemContext, mapping: &[usize], roles: &[Role], routes: &[Vec<usize>]) -> Self {
        let mut a = Assignment::zeros(ctx);
        let nv = ctx.net.node_count();
        for (u, &v) in mapping.iter().enumerate() {
            a.m[u][v] = true;
            if !ctx.is_endpoint(u) {
                for w in 0..nv {
                    a.ms[u][w] = roles[u] == Role::Switch;
                    a.md[u][w] = roles[u] == Role::Dc;
                }
                let f = ctx.node_function[u].unwrap();
                a.inst[f][v] = true;
                a.used[v] = true;
            }
        }
        for (p, path) in routes.iter().enumerate() {
            let edge = &ctx.graph.edges[p];
            let (x, y) = (mapping[edge.from], mapping[edge.to]);
            for &e in path {
                a.e[p].insert((x, y, e));
                a.lat[p] += ctx.net.edges()[e].latency;
            }
        }
        for (i, e) in ctx.net.edges().iter().enumerate() {
            let load: Rational = (0..routes.len()).filter(|&p| routes[p].contains(&i)).map(|p| ctx.dreq(p)).sum();
            a.remdr[i] = e.rate - load;
        }
        a
    }

    /// Sets `remdr` and `lat` to the values the binaries imply.
    pub fn recompute_continuous(&mut self, ctx: &ProblemContext) {
        let mut load = vec![Rational::zero(); ctx.net.edges().len()];
        for (p, set) in self.e.iter().enumerate() {
            let mut lat = Rational::zero();
            for &(_, _, e) in set {
                load[e] += ctx.dreq(p);
                lat += ctx.net.edges()[e].latency;
            }
            self.lat[p] = lat;
        }
        for (i, e) in ctx.net.edges().iter().enumerate() {
            self.remdr[i] = e.rate - load[i];
        }
    }

    pub fn objective(&self, ctx: &ProblemContext) -> ObjectiveValues {
        objective_from(ctx, &self.remdr, self.used.iter().filter(|&&u| u).count() as u32, &self.lat)
    }
}
