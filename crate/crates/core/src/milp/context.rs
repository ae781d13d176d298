use std::collections::BTreeSet;

use num_traits::Zero;

use super::solution::Role;
use super::BuildError;
use crate::graph_build::VnfGraph;
use crate::net_model::{FunctionCatalog, SubstrateNetwork};
use crate::rational::Rational;

/// Latency bound of one endpoint pair over the union of its path edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundGroup {
    pub pair: usize,
    pub edges: Vec<usize>,
    pub bound: Rational,
}

/// Inputs of one placement problem plus the indices every consumer needs.
#[derive(Debug, Clone)]
pub struct ProblemContext {
    pub net: SubstrateNetwork,
    pub catalog: FunctionCatalog,
    pub graph: VnfGraph,
    /// Catalog index of each graph node's function (`None` for endpoints).
    pub node_function: Vec<Option<usize>>,
    /// Substrate node of each endpoint (`None` for uses).
    pub node_location: Vec<Option<usize>>,
    pub uses: Vec<usize>,
    pub endpoints: Vec<usize>,
    pub uses_of_function: Vec<Vec<usize>>,
    /// Number of bounded-pair paths through each graph edge; the latency
    /// objective is `sum(lat_coeff[p] * lat[p])`.
    pub lat_coeff: Vec<u64>,
    pub bound_groups: Vec<BoundGroup>,
    /// Whether graph node `u` fits on substrate node `v` on its own.
    pub hostable: Vec<Vec<bool>>,
    /// Total capacity of non-self-loop edges (the REMDR value of an empty placement).
    pub nonloop_capacity: Rational,
}

impl ProblemContext {
    pub fn new(net: SubstrateNetwork, catalog: FunctionCatalog, graph: VnfGraph) -> Result<Self, BuildError> {
        let n = graph.nodes.len();
        let mut node_function = vec![None; n];
        let mut node_location = vec![None; n];
        let (mut uses, mut endpoints) = (Vec::new(), Vec::new());
        let mut uses_of_function = vec![Vec::new(); catalog.len()];
        for (i, node) in graph.nodes.iter().enumerate() {
            if let Some(f) = node.function() {
                let fi = catalog.index_of(f).ok_or_else(|| BuildError::UnknownFunction {
                    node: graph.node_label(i),
                    function: f.to_string(),
                })?;
                node_function[i] = Some(fi);
                uses_of_function[fi].push(i);
                uses.push(i);
            } else {
                let loc = node.location().unwrap_or_default();
                let v = net.node_by_id(loc).ok_or_else(|| BuildError::UnknownLocation {
                    node: graph.node_label(i),
                    location: loc.to_string(),
                })?;
                node_location[i] = Some(v);
                endpoints.push(i);
            }
        }
        if uses.is_empty() {
            return Err(BuildError::Empty);
        }

        let mut lat_coeff = vec![0u64; graph.edges.len()];
        let mut bound_groups = Vec::new();
        for (pi, pair) in graph.pairs.iter().enumerate() {
            let Some(bound) = pair.bound else { continue };
            let mut union = BTreeSet::new();
            for path in &pair.paths {
                for &e in path {
                    lat_coeff[e] += 1;
                    union.insert(e);
                }
            }
            bound_groups.push(BoundGroup { pair: pi, edges: union.into_iter().collect(), bound });
        }

        let nonloop_capacity = net.edges().iter().filter(|e| !e.is_self_loop()).map(|e| e.rate).sum();
        let mut ctx = ProblemContext {
            net,
            catalog,
            graph,
            node_function,
            node_location,
            uses,
            endpoints,
            uses_of_function,
            lat_coeff,
            bound_groups,
            hostable: Vec::new(),
            nonloop_capacity,
        };
        ctx.hostable = (0..n).map(|u| (0..ctx.net.node_count()).map(|v| ctx.fits_alone(u, v)).collect()).collect();
        Ok(ctx)
    }

    fn fits_alone(&self, u: usize, v: usize) -> bool {
        match self.node_location[u] {
            Some(loc) => loc == v,
            None => self.allowed_roles(u).into_iter().any(|r| self.demand(u, r) <= self.capacity(v, r)),
        }
    }

    pub fn is_endpoint(&self, u: usize) -> bool {
        self.node_location[u].is_some()
    }

    /// Roles a use may take: data-center when `p_d > 0`, switch when `p_s > 0`.
    pub fn allowed_roles(&self, u: usize) -> Vec<Role> {
        let Some(fi) = self.node_function[u] else { return Vec::new() };
        let f = &self.catalog.functions()[fi];
        let mut roles = Vec::with_capacity(2);
        if !f.dc_demand.is_zero() {
            roles.push(Role::Dc);
        }
        if !f.switch_demand.is_zero() {
            roles.push(Role::Switch);
        }
        roles
    }

    /// The role a use gets on nodes it is not mapped to.
    pub fn default_role(&self, u: usize) -> Role {
        self.allowed_roles(u).first().copied().unwrap_or(Role::Dc)
    }

    pub fn demand(&self, u: usize, role: Role) -> Rational {
        let fi = self.node_function[u].expect("demand of an endpoint");
        let f = &self.catalog.functions()[fi];
        match role {
            Role::Dc => f.dc_demand,
            Role::Switch => f.switch_demand,
        }
    }

    pub fn capacity(&self, v: usize, role: Role) -> Rational {
        let node = &self.net.nodes()[v];
        match role {
            Role::Dc => node.dc_capacity,
            Role::Switch => node.switch_capacity,
        }
    }

    pub fn dreq(&self, p: usize) -> Rational {
        self.graph.edges[p].rate
    }

    pub fn node_label(&self, u: usize) -> String {
        self.graph.node_label(u)
    }

    /// `e` variables exist for layer `(x, y)` of graph edge `p` only when
    /// both ends can be hosted there.
    pub fn layer_possible(&self, p: usize, x: usize, y: usize) -> bool {
        let edge = &self.graph.edges[p];
        self.hostable[edge.from][x] && self.hostable[edge.to][y]
    }
}
