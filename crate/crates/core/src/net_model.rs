//! Substrate network, function catalog and deployment requests.
//!
//! All three are immutable once validated. The JSON loaders accept every
//! number either as a JSON number or as a decimal/fraction string and parse
//! it exactly.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("cross-reference error: {0}")]
    CrossReference(String),
}

impl ModelError {
    fn from_json(err: serde_json::Error) -> Self {
        ModelError::Schema { line: err.line(), column: err.column(), message: err.to_string() }
    }
}

fn read(path: &Path) -> Result<String, ModelError> {
    fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), ModelError> {
    fs::write(path, text).map_err(|source| ModelError::Io { path: path.to_path_buf(), source })
}

/// Identifiers appear in the chaining language and in LP variable names, so
/// they are restricted to `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_identifier(kind: &str, id: &str) -> Result<(), ModelError> {
    if is_identifier(id) {
        Ok(())
    } else {
        Err(ModelError::Validation(format!("{kind} id `{id}` is not a valid identifier")))
    }
}

fn check_nonnegative(what: &str, value: &Rational) -> Result<(), ModelError> {
    if value.is_negative() {
        Err(ModelError::Validation(format!("{what} must be nonnegative, got {}", rational::format_rational(value))))
    } else {
        Ok(())
    }
}

mod serde_count {
    use super::*;
    use serde::Deserializer;

    pub fn serialize<S: serde::Serializer>(v: &u32, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(*v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u32, D::Error> {
        let r = rational::serde_str::deserialize(d)?;
        if !r.is_integer() || r.is_negative() || *r.numer() > u32::MAX as i128 {
            return Err(serde::de::Error::custom(format!(
                "expected a nonnegative integer, got {}",
                rational::format_rational(&r)
            )));
        }
        Ok(*r.numer() as u32)
    }
}

// ---------------------------------------------------------------------------
// Substrate network
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstrateNode {
    pub id: String,
    /// Data-center compute capacity `c_d(v)`.
    #[serde(rename = "c_d", with = "rational::serde_str")]
    pub dc_capacity: Rational,
    /// Switch compute capacity `c_s(v)`.
    #[serde(rename = "c_s", with = "rational::serde_str")]
    pub switch_capacity: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstrateEdge {
    pub src: usize,
    pub dst: usize,
    pub rate: Rational,
    pub latency: Rational,
}

impl SubstrateEdge {
    pub fn is_self_loop(&self) -> bool {
        self.src == self.dst
    }
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    src: String,
    dst: String,
    #[serde(with = "rational::serde_str")]
    d: Rational,
    #[serde(with = "rational::serde_str")]
    l: Rational,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    nodes: Vec<SubstrateNode>,
    edges: Vec<EdgeRecord>,
}

/// Directed substrate graph with dual node capacities. Self-loops are
/// ordinary edges and must be listed explicitly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstrateNetwork {
    nodes: Vec<SubstrateNode>,
    edges: Vec<SubstrateEdge>,
    node_index: HashMap<String, usize>,
    edge_index: HashMap<(usize, usize), usize>,
}

impl SubstrateNetwork {
    /// Builds and validates a network from nodes and `(src, dst, rate, latency)` links.
    pub fn new(
        nodes: Vec<SubstrateNode>,
        links: Vec<(String, String, Rational, Rational)>,
    ) -> Result<Self, ModelError> {
        let mut node_index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            check_identifier("node", &n.id)?;
            if node_index.insert(n.id.clone(), i).is_some() {
                return Err(ModelError::Validation(format!("duplicate node `{}`", n.id)));
            }
        }
        let mut edges = Vec::with_capacity(links.len());
        let mut edge_index = HashMap::new();
        for (src, dst, rate, latency) in links {
            let s = *node_index
                .get(&src)
                .ok_or_else(|| ModelError::Validation(format!("edge ({src},{dst}) references unknown node `{src}`")))?;
            let t = *node_index
                .get(&dst)
                .ok_or_else(|| ModelError::Validation(format!("edge ({src},{dst}) references unknown node `{dst}`")))?;
            if edge_index.insert((s, t), edges.len()).is_some() {
                return Err(ModelError::Validation(format!("duplicate edge ({src},{dst})")));
            }
            edges.push(SubstrateEdge { src: s, dst: t, rate, latency });
        }
        let net = SubstrateNetwork { nodes, edges, node_index, edge_index };
        net.validate()?;
        Ok(net)
    }

    /// Re-checks every invariant of the type.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.nodes.is_empty() {
            return Err(ModelError::Validation("network has no nodes".into()));
        }
        for n in &self.nodes {
            check_nonnegative(&format!("c_d({})", n.id), &n.dc_capacity)?;
            check_nonnegative(&format!("c_s({})", n.id), &n.switch_capacity)?;
        }
        for e in &self.edges {
            let name = format!("({},{})", self.nodes[e.src].id, self.nodes[e.dst].id);
            check_nonnegative(&format!("d{name}"), &e.rate)?;
            check_nonnegative(&format!("l{name}"), &e.latency)?;
        }
        if !self.is_weakly_connected() {
            return Err(ModelError::Validation("network is not connected (ignoring self-loops)".into()));
        }
        Ok(())
    }

    fn is_weakly_connected(&self) -> bool {
        let n = self.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for e in self.edges.iter().filter(|e| !e.is_self_loop()) {
            adj[e.src].push(e.dst);
            adj[e.dst].push(e.src);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let file: NetworkFile = serde_json::from_str(text).map_err(ModelError::from_json)?;
        let links = file.edges.into_iter().map(|e| (e.src, e.dst, e.d, e.l)).collect();
        Self::new(file.nodes, links)
    }

    pub fn to_json_string(&self) -> String {
        let file = NetworkFile {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    src: self.nodes[e.src].id.clone(),
                    dst: self.nodes[e.dst].id.clone(),
                    d: e.rate,
                    l: e.latency,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("network serializes")
    }

    pub fn nodes(&self) -> &[SubstrateNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[SubstrateEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_id(&self, v: usize) -> &str {
        &self.nodes[v].id
    }

    pub fn node_by_id(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn edge_between(&self, src: usize, dst: usize) -> Option<usize> {
        self.edge_index.get(&(src, dst)).copied()
    }

    pub fn self_loop(&self, v: usize) -> Option<usize> {
        self.edge_between(v, v)
    }

    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.src == v).map(|(i, _)| i)
    }

    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.dst == v).map(|(i, _)| i)
    }

    pub fn edge_label(&self, e: usize) -> (String, String) {
        let edge = &self.edges[e];
        (self.nodes[edge.src].id.clone(), self.nodes[edge.dst].id.clone())
    }
}

pub fn load_network(path: impl AsRef<Path>) -> Result<SubstrateNetwork, ModelError> {
    SubstrateNetwork::from_json_str(&read(path.as_ref())?)
}

pub fn save_network(net: &SubstrateNetwork, path: impl AsRef<Path>) -> Result<(), ModelError> {
    write(path.as_ref(), &net.to_json_string())
}

// ---------------------------------------------------------------------------
// Function catalog
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFunction {
    pub id: String,
    /// Demand when running in a data center, `p_d(f)`.
    #[serde(rename = "p_d", with = "rational::serde_str")]
    pub dc_demand: Rational,
    /// Demand when running on a switch, `p_s(f)`.
    #[serde(rename = "p_s", with = "rational::serde_str")]
    pub switch_demand: Rational,
    #[serde(rename = "n_inst", with = "serde_count")]
    pub max_instances: u32,
    #[serde(rename = "n_req", with = "serde_count")]
    pub max_requests: u32,
}

impl NetworkFunction {
    pub fn dc_only(&self) -> bool {
        self.switch_demand.is_zero() && !self.dc_demand.is_zero()
    }

    pub fn switch_only(&self) -> bool {
        self.dc_demand.is_zero() && !self.switch_demand.is_zero()
    }

    /// One instance serves a single chain (`n_req = 1`).
    pub fn is_per_chain(&self) -> bool {
        self.max_requests == 1
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    functions: Vec<NetworkFunction>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionCatalog {
    functions: Vec<NetworkFunction>,
    index: HashMap<String, usize>,
}

impl FunctionCatalog {
    pub fn new(functions: Vec<NetworkFunction>) -> Result<Self, ModelError> {
        let mut index = HashMap::new();
        for (i, f) in functions.iter().enumerate() {
            check_identifier("function", &f.id)?;
            if index.insert(f.id.clone(), i).is_some() {
                return Err(ModelError::Validation(format!("duplicate function `{}`", f.id)));
            }
        }
        let catalog = FunctionCatalog { functions, index };
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for f in &self.functions {
            check_nonnegative(&format!("p_d({})", f.id), &f.dc_demand)?;
            check_nonnegative(&format!("p_s({})", f.id), &f.switch_demand)?;
            if f.dc_demand.is_zero() && f.switch_demand.is_zero() {
                return Err(ModelError::Validation(format!(
                    "function `{}` has p_d = p_s = 0 and cannot be placed anywhere",
                    f.id
                )));
            }
            if f.max_instances == 0 {
                return Err(ModelError::Validation(format!("function `{}` has n_inst = 0", f.id)));
            }
            if f.max_requests == 0 {
                return Err(ModelError::Validation(format!("function `{}` has n_req = 0", f.id)));
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let file: CatalogFile = serde_json::from_str(text).map_err(ModelError::from_json)?;
        Self::new(file.functions)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&CatalogFile { functions: self.functions.clone() }).expect("catalog serializes")
    }

    pub fn functions(&self) -> &[NetworkFunction] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&NetworkFunction> {
        self.index.get(id).map(|&i| &self.functions[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<FunctionCatalog, ModelError> {
    FunctionCatalog::from_json_str(&read(path.as_ref())?)
}

pub fn save_catalog(catalog: &FunctionCatalog, path: impl AsRef<Path>) -> Result<(), ModelError> {
    write(path.as_ref(), &catalog.to_json_string())
}

// ---------------------------------------------------------------------------
// Deployment requests
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionUse {
    pub id: String,
    pub function: String,
    /// Outgoing-to-incoming rate ratio for each branch leaving the use, `r(u)`.
    #[serde(with = "rational::serde_vec")]
    pub ratios: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoint {
    pub id: String,
    #[serde(rename = "loc")]
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyBound {
    pub src: String,
    pub dst: String,
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentRequest {
    pub id: String,
    pub uses: Vec<FunctionUse>,
    /// Chaining expression in the request language.
    pub chain: String,
    pub endpoints: Vec<Endpoint>,
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
    #[serde(rename = "d_in", with = "rational::serde_str")]
    pub initial_rate: Rational,
    #[serde(rename = "l_req", default)]
    pub latency_bounds: Vec<LatencyBound>,
}

impl DeploymentRequest {
    pub fn use_by_id(&self, id: &str) -> Option<&FunctionUse> {
        self.uses.iter().find(|u| u.id == id)
    }

    pub fn endpoint_by_id(&self, id: &str) -> Option<&Endpoint> {
        self.endpoints.iter().find(|a| a.id == id)
    }

    pub fn latency_bound(&self, src: &str, dst: &str) -> Option<Rational> {
        self.latency_bounds.iter().find(|b| b.src == src && b.dst == dst).map(|b| b.bound)
    }

    /// Checks the request on its own (ids, ratios, pairs, bounds).
    pub fn validate(&self) -> Result<(), ModelError> {
        check_identifier("request", &self.id)?;
        let mut ids = HashSet::new();
        for u in &self.uses {
            check_identifier("use", &u.id)?;
            if !ids.insert(u.id.as_str()) {
                return Err(ModelError::Validation(format!("request {}: duplicate symbol `{}`", self.id, u.id)));
            }
            if u.ratios.is_empty() {
                return Err(ModelError::Validation(format!("request {}: use `{}` has no ratios", self.id, u.id)));
            }
            if u.ratios.iter().any(|r| !r.is_positive()) {
                return Err(ModelError::Validation(format!(
                    "request {}: use `{}` has a nonpositive ratio",
                    self.id, u.id
                )));
            }
        }
        for a in &self.endpoints {
            check_identifier("endpoint", &a.id)?;
            if !ids.insert(a.id.as_str()) {
                return Err(ModelError::Validation(format!("request {}: duplicate symbol `{}`", self.id, a.id)));
            }
        }
        if !self.initial_rate.is_positive() {
            return Err(ModelError::Validation(format!("request {}: d_in must be positive", self.id)));
        }
        let mut pairs = BTreeSet::new();
        for (s, t) in &self.pairs {
            for p in [s, t] {
                if self.endpoint_by_id(p).is_none() {
                    return Err(ModelError::Validation(format!(
                        "request {}: pair ({s},{t}) references unknown endpoint `{p}`",
                        self.id
                    )));
                }
            }
            if !pairs.insert((s.as_str(), t.as_str())) {
                return Err(ModelError::Validation(format!("request {}: duplicate pair ({s},{t})", self.id)));
            }
        }
        let mut bounded = BTreeSet::new();
        for b in &self.latency_bounds {
            if !pairs.contains(&(b.src.as_str(), b.dst.as_str())) {
                return Err(ModelError::Validation(format!(
                    "request {}: l_req key ({},{}) is not an endpoint pair",
                    self.id, b.src, b.dst
                )));
            }
            if !b.bound.is_positive() {
                return Err(ModelError::Validation(format!(
                    "request {}: latency bound for ({},{}) must be positive",
                    self.id, b.src, b.dst
                )));
            }
            if !bounded.insert((b.src.as_str(), b.dst.as_str())) {
                return Err(ModelError::Validation(format!(
                    "request {}: duplicate l_req entry ({},{})",
                    self.id, b.src, b.dst
                )));
            }
        }
        Ok(())
    }

    /// Checks that every function and location exists.
    pub fn cross_validate(&self, catalog: &FunctionCatalog, net: &SubstrateNetwork) -> Result<(), ModelError> {
        for u in &self.uses {
            if catalog.get(&u.function).is_none() {
                return Err(ModelError::CrossReference(format!(
                    "request {}: use `{}` requests unknown function `{}`",
                    self.id, u.id, u.function
                )));
            }
        }
        for a in &self.endpoints {
            if net.node_by_id(&a.location).is_none() {
                return Err(ModelError::CrossReference(format!(
                    "request {}: endpoint `{}` located at unknown node `{}`",
                    self.id, a.id, a.location
                )));
            }
        }
        Ok(())
    }
}

pub fn parse_requests(
    text: &str,
    catalog: &FunctionCatalog,
    net: &SubstrateNetwork,
) -> Result<Vec<DeploymentRequest>, ModelError> {
    let requests: Vec<DeploymentRequest> = serde_json::from_str(text).map_err(ModelError::from_json)?;
    let mut seen = HashSet::new();
    for r in &requests {
        r.validate()?;
        if !seen.insert(r.id.clone()) {
            return Err(ModelError::Validation(format!("duplicate request id `{}`", r.id)));
        }
        r.cross_validate(catalog, net)?;
    }
    Ok(requests)
}

pub fn load_requests(
    path: impl AsRef<Path>,
    catalog: &FunctionCatalog,
    net: &SubstrateNetwork,
) -> Result<Vec<DeploymentRequest>, ModelError> {
    parse_requests(&read(path.as_ref())?, catalog, net)
}

pub fn requests_to_json_string(requests: &[DeploymentRequest]) -> String {
    serde_json::to_string_pretty(requests).expect("requests serialize")
}
