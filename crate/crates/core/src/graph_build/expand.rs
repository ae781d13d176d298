use std::collections::{HashMap, HashSet};

use itertools::Itertools;
use rayon::prelude::*;

use super::paths::{enumerate_paths, topological_order};
use super::{ExpansionError, VnfEdge, VnfGraph, VnfNode, VnfNodeKind};
use crate::chain_lang::{ChainAst, Module, ModuleSeq, Term};
use crate::net_model::DeploymentRequest;
use crate::rational::Rational;

/// Hard cap on the number of graphs [`expand_all`] will materialize.
pub const EXPANSION_LIMIT: u64 = 1_000_000;

/// All graphs of one request, in lexicographic order of the module permutations.
#[derive(Debug, Clone)]
pub struct ExpansionSet {
    pub request: String,
    pub graphs: Vec<VnfGraph>,
    /// Product of `k!` over the orderable modules.
    pub combination_count: u128,
    /// The permutation chosen for every orderable module, per graph.
    pub choices: Vec<Vec<Vec<usize>>>,
}

/// Orderable term lists in the order the builder consumes them. A parallel
/// body is visited once even though it is replicated.
fn orderable_modules(ast: &ChainAst) -> Vec<&[Term]> {
    fn walk<'a>(seq: &'a ModuleSeq, out: &mut Vec<&'a [Term]>) {
        for m in &seq.0 {
            match m {
                Module::Term(_) => {}
                Module::OptOrder(ts) => out.push(ts),
                Module::Split { branches, .. } => branches.iter().for_each(|b| walk(b, out)),
                Module::Parallel { preamble, body, .. } => {
                    out.push(preamble);
                    walk(body, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(&ast.root, &mut out);
    out
}

pub fn orderable_sizes(ast: &ChainAst) -> Vec<usize> {
    orderable_modules(ast).iter().map(|ts| ts.len()).collect()
}

/// Product of `k!` over the orderable modules, saturating at `u128::MAX`.
pub fn combination_count(ast: &ChainAst) -> u128 {
    orderable_sizes(ast).into_iter().flat_map(|k| 1..=k as u128).fold(1u128, |acc, x| acc.saturating_mul(x))
}

struct Builder<'a> {
    req: &'a DeploymentRequest,
    choices: &'a [Vec<usize>],
    cursor: usize,
    suffix: String,
    nodes: Vec<VnfNode>,
    edges: Vec<(usize, usize, usize)>,
    edge_set: HashSet<(usize, usize)>,
    names: HashSet<String>,
    endpoints: HashMap<String, usize>,
}

type Ports = Vec<(usize, usize)>;

impl<'a> Builder<'a> {
    fn next_choice(&mut self, len: usize) -> Vec<usize> {
        let choice = self.choices.get(self.cursor).cloned().unwrap_or_else(|| (0..len).collect());
        self.cursor += 1;
        assert_eq!(choice.len(), len, "permutation does not match module size");
        choice
    }

    fn node(&mut self, term: &Term) -> Result<usize, ExpansionError> {
        let sym = term.symbol();
        if let Some(a) = self.req.endpoint_by_id(sym) {
            if let Some(&i) = self.endpoints.get(sym) {
                return Ok(i);
            }
            let i = self.nodes.len();
            self.nodes.push(VnfNode {
                name: sym.to_string(),
                origin: sym.to_string(),
                request: 0,
                kind: VnfNodeKind::Endpoint { location: a.location.clone() },
            });
            self.endpoints.insert(sym.to_string(), i);
            return Ok(i);
        }
        let u = self.req.use_by_id(sym).ok_or_else(|| ExpansionError::UnknownSymbol(sym.to_string()))?;
        let name = format!("{sym}{}", self.suffix);
        if !self.names.insert(name.clone()) {
            return Err(ExpansionError::DuplicateUse(name));
        }
        self.nodes.push(VnfNode {
            name,
            origin: sym.to_string(),
            request: 0,
            kind: VnfNodeKind::Use { function: u.function.clone(), ratios: u.ratios.clone() },
        });
        Ok(self.nodes.len() - 1)
    }

    fn orderable_node(&mut self, term: &Term) -> Result<usize, ExpansionError> {
        let sym = term.symbol();
        if self.req.endpoint_by_id(sym).is_some() {
            return Err(ExpansionError::EndpointInOrderable(sym.to_string()));
        }
        if self.req.use_by_id(sym).is_some_and(|u| u.ratios.len() != 1) {
            return Err(ExpansionError::SplitterInOrderable(sym.to_string()));
        }
        self.node(term)
    }

    fn splitter_node(&mut self, term: &Term) -> Result<usize, ExpansionError> {
        if self.req.endpoint_by_id(term.symbol()).is_some() {
            return Err(ExpansionError::EndpointSplitter(term.symbol().to_string()));
        }
        self.node(term)
    }

    fn connect(&mut self, ports: &Ports, to: usize) -> Result<(), ExpansionError> {
        for &(from, branch) in ports {
            if !self.edge_set.insert((from, to)) {
                return Err(ExpansionError::DuplicateEdge(self.nodes[from].name.clone(), self.nodes[to].name.clone()));
            }
            self.edges.push((from, to, branch));
        }
        Ok(())
    }

    fn seq(&mut self, seq: &'a ModuleSeq, mut ports: Ports) -> Result<Ports, ExpansionError> {
        for m in &seq.0 {
            ports = self.module(m, ports)?;
        }
        Ok(ports)
    }

    fn chain(&mut self, terms: impl IntoIterator<Item = &'a Term>, mut ports: Ports) -> Result<Ports, ExpansionError> {
        for t in terms {
            let v = self.orderable_node(t)?;
            self.connect(&ports, v)?;
            ports = vec![(v, 0)];
        }
        Ok(ports)
    }

    fn module(&mut self, m: &'a Module, ports: Ports) -> Result<Ports, ExpansionError> {
        match m {
            Module::Term(t) => {
                let v = self.node(t)?;
                self.connect(&ports, v)?;
                Ok(vec![(v, 0)])
            }
            Module::OptOrder(ts) => {
                let perm = self.next_choice(ts.len());
                self.chain(perm.iter().map(|&i| &ts[i]), ports)
            }
            Module::Split { splitter, branches } => {
                let s = self.splitter_node(splitter)?;
                self.connect(&ports, s)?;
                let mut exits = Vec::new();
                for (i, b) in branches.iter().enumerate() {
                    exits.extend(self.seq(b, vec![(s, i)])?);
                }
                Ok(exits)
            }
            Module::Parallel { splitter, preamble, body, count } => {
                let perm = self.next_choice(preamble.len());
                let order: Vec<&Term> = perm.iter().map(|&i| &preamble[i]).collect();
                let at = order
                    .iter()
                    .position(|t| *t == splitter)
                    .expect("parser guarantees the splitter is in the preamble");
                let ports = self.chain(order[..at].iter().copied(), ports)?;
                let s = self.splitter_node(splitter)?;
                self.connect(&ports, s)?;
                let body_start = self.cursor;
                let outer = self.suffix.clone();
                let mut exits = Vec::new();
                for k in 1..=*count {
                    self.cursor = body_start;
                    self.suffix = format!("{outer}#{k}");
                    let branch = self.chain(order[at + 1..].iter().copied(), vec![(s, k as usize - 1)])?;
                    exits.extend(self.seq(body, branch)?);
                }
                self.suffix = outer;
                Ok(exits)
            }
        }
    }
}

/// Builds the graph selected by one permutation per orderable module
/// (identity permutations for missing entries).
pub fn expand_with_choices(
    ast: &ChainAst,
    req: &DeploymentRequest,
    choices: &[Vec<usize>],
) -> Result<VnfGraph, ExpansionError> {
    let mut b = Builder {
        req,
        choices,
        cursor: 0,
        suffix: String::new(),
        nodes: Vec::new(),
        edges: Vec::new(),
        edge_set: HashSet::new(),
        names: HashSet::new(),
        endpoints: HashMap::new(),
    };
    b.seq(&ast.root, Vec::new())?;

    let used: HashSet<&str> = b.nodes.iter().map(|n| n.origin.as_str()).collect();
    if let Some(u) = req.uses.iter().find(|u| !used.contains(u.id.as_str())) {
        return Err(ExpansionError::UnusedUse(u.id.clone()));
    }

    let mut graph = VnfGraph {
        requests: vec![req.id.clone()],
        nodes: b.nodes,
        edges: b
            .edges
            .iter()
            .map(|&(from, to, branch)| VnfEdge { from, to, rate: Rational::default(), branch })
            .collect(),
        pairs: Vec::new(),
    };
    annotate_rates(&mut graph, req.initial_rate)?;

    let mut pairs = Vec::new();
    for (s, t) in &req.pairs {
        let find = |id: &str| b.endpoints.get(id).copied();
        match (find(s), find(t)) {
            (Some(si), Some(ti)) => pairs.push((si, ti, req.latency_bound(s, t))),
            _ => return Err(ExpansionError::NoPath(s.clone(), t.clone())),
        }
    }
    enumerate_paths(&mut graph, &pairs)?;
    Ok(graph)
}

fn annotate_rates(graph: &mut VnfGraph, initial: Rational) -> Result<(), ExpansionError> {
    let order = topological_order(graph)?;
    for v in order {
        let incoming = graph.incoming_rate(v).unwrap_or(initial);
        let outs: Vec<usize> = graph.out_edges(v).collect();
        let node = &graph.nodes[v];
        match &node.kind {
            VnfNodeKind::Use { ratios, .. } => {
                if outs.is_empty() {
                    return Err(ExpansionError::DanglingUse(node.name.clone()));
                }
                let mut branches: Vec<usize> = outs.iter().map(|&e| graph.edges[e].branch).collect();
                branches.sort_unstable();
                if outs.len() != ratios.len() || branches.iter().enumerate().any(|(i, &b)| i != b) {
                    return Err(ExpansionError::RatioMismatch {
                        name: node.name.clone(),
                        expected: outs.len(),
                        found: ratios.len(),
                    });
                }
                let ratios = ratios.clone();
                for e in outs {
                    graph.edges[e].rate = ratios[graph.edges[e].branch] * incoming;
                }
            }
            VnfNodeKind::Endpoint { .. } => {
                if outs.len() > 1 {
                    return Err(ExpansionError::EndpointSplitter(node.name.clone()));
                }
                for e in outs {
                    graph.edges[e].rate = incoming;
                }
            }
        }
    }
    Ok(())
}

pub fn expand_all(ast: &ChainAst, req: &DeploymentRequest) -> Result<ExpansionSet, ExpansionError> {
    let sizes = orderable_sizes(ast);
    let count = combination_count(ast);
    if count > EXPANSION_LIMIT as u128 {
        return Err(ExpansionError::TooManyCombinations { count: count.to_string(), limit: EXPANSION_LIMIT });
    }
    let choices: Vec<Vec<Vec<usize>>> = if sizes.is_empty() {
        vec![Vec::new()]
    } else {
        sizes.iter().map(|&k| (0..k).permutations(k)).multi_cartesian_product().collect()
    };
    let results: Vec<Result<VnfGraph, ExpansionError>> =
        choices.par_iter().map(|c| expand_with_choices(ast, req, c)).collect();
    let graphs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ExpansionSet { request: req.id.clone(), graphs, combination_count: count, choices })
}

/// The permutation per orderable module that sorts terms by ascending total
/// outgoing ratio, stable in declaration order.
pub fn heuristic_choices(ast: &ChainAst, req: &DeploymentRequest) -> Vec<Vec<usize>> {
    let ratio = |t: &Term| -> Rational {
        req.use_by_id(t.symbol()).map(|u| u.ratios.iter().sum()).unwrap_or_else(|| Rational::from_integer(1))
    };
    orderable_modules(ast)
        .into_iter()
        .map(|ts| {
            let mut idx: Vec<usize> = (0..ts.len()).collect();
            idx.sort_by_key(|&i| ratio(&ts[i]));
            idx
        })
        .collect()
}

pub fn expand_heuristic(ast: &ChainAst, req: &DeploymentRequest) -> Result<VnfGraph, ExpansionError> {
    expand_with_choices(ast, req, &heuristic_choices(ast, req))
}
