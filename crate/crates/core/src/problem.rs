//! Loading a full problem (network, catalog, requests) and turning it into
//! placement contexts.

use std::path::Path;
use std::sync::Arc;

use crate::chain_lang::{parse_request, ChainAst, ParseError};
use crate::graph_build::{combine, expand_all, expand_with_choices, heuristic_choices, ExpansionError, VnfGraph};
use crate::milp::{BuildError, ProblemContext};
use crate::net_model::{
    load_catalog, load_network, load_requests, parse_requests, DeploymentRequest, FunctionCatalog, ModelError,
    SubstrateNetwork,
};

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("request {request}: {error}")]
    Parse { request: String, error: ParseError },
    #[error("request {request}: {error}")]
    Expansion { request: String, error: ExpansionError },
    #[error(transparent)]
    Build(#[from] BuildError),
}

impl ProblemError {
    /// True for malformed chain syntax, the one class of input error that is
    /// not a semantic problem.
    pub fn is_syntax(&self) -> bool {
        matches!(self, ProblemError::Parse { error, .. } if error.is_syntax())
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub net: SubstrateNetwork,
    pub catalog: FunctionCatalog,
    pub requests: Vec<DeploymentRequest>,
    pub asts: Vec<ChainAst>,
}

impl Problem {
    pub fn new(
        net: SubstrateNetwork,
        catalog: FunctionCatalog,
        requests: Vec<DeploymentRequest>,
    ) -> Result<Self, ProblemError> {
        let mut asts = Vec::with_capacity(requests.len());
        for r in &requests {
            r.validate()?;
            r.cross_validate(&catalog, &net)?;
            asts.push(parse_request(r).map_err(|error| ProblemError::Parse { request: r.id.clone(), error })?);
        }
        Ok(Problem { net, catalog, requests, asts })
    }

    pub fn from_json(net: &str, catalog: &str, requests: &str) -> Result<Self, ProblemError> {
        let net = SubstrateNetwork::from_json_str(net)?;
        let catalog = FunctionCatalog::from_json_str(catalog)?;
        let requests = parse_requests(requests, &catalog, &net)?;
        Problem::new(net, catalog, requests)
    }

    pub fn load(
        net: impl AsRef<Path>,
        catalog: impl AsRef<Path>,
        requests: impl AsRef<Path>,
    ) -> Result<Self, ProblemError> {
        let net = load_network(net)?;
        let catalog = load_catalog(catalog)?;
        let requests = load_requests(requests, &catalog, &net)?;
        Problem::new(net, catalog, requests)
    }

    fn expansion_error(&self, i: usize) -> impl Fn(ExpansionError) -> ProblemError + '_ {
        move |error| ProblemError::Expansion { request: self.requests[i].id.clone(), error }
    }

    /// Combined graph for one permutation choice per request.
    pub fn graph_with(&self, choices: &[Vec<Vec<usize>>]) -> Result<VnfGraph, ProblemError> {
        let graphs = (0..self.requests.len())
            .map(|i| {
                let c = choices.get(i).map(Vec::as_slice).unwrap_or(&[]);
                expand_with_choices(&self.asts[i], &self.requests[i], c).map_err(self.expansion_error(i))
            })
            .collect::<Result<Vec<_>, _>>()?;
        combine(&graphs).map_err(|error| ProblemError::Expansion { request: String::new(), error })
    }

    pub fn heuristic_choices(&self) -> Vec<Vec<Vec<usize>>> {
        self.asts.iter().zip(&self.requests).map(|(a, r)| heuristic_choices(a, r)).collect()
    }

    pub fn heuristic_graph(&self) -> Result<VnfGraph, ProblemError> {
        self.graph_with(&self.heuristic_choices())
    }

    /// Every graph of every request, request by request.
    pub fn all_graphs(&self) -> Result<Vec<Vec<VnfGraph>>, ProblemError> {
        (0..self.requests.len())
            .map(|i| expand_all(&self.asts[i], &self.requests[i]).map(|s| s.graphs).map_err(self.expansion_error(i)))
            .collect()
    }

    pub fn context(&self, graph: VnfGraph) -> Result<Arc<ProblemContext>, ProblemError> {
        Ok(Arc::new(ProblemContext::new(self.net.clone(), self.catalog.clone(), graph)?))
    }

    pub fn heuristic_context(&self) -> Result<Arc<ProblemContext>, ProblemError> {
        self.context(self.heuristic_graph()?)
    }
}
