//! Exact placement optimization.
//!
//! Two engines share one contract. [`solve`] runs branch-and-bound with
//! propagation directly on the linearized 0-1 program; it is the reference.
//! [`solve_decomposed`] searches function mappings first and routes each
//! graph edge afterwards, with admissible bounds on both levels; it is the
//! one that scales to a dozen substrate nodes. Both prove optimality, so
//! their objective values agree exactly.

mod decomposed;
mod monolithic;
mod topology;

#[cfg(test)]
mod tests;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::milp::{MetricBound, Objective, PlacementSolution, ProblemContext};
use crate::rational::Rational;

pub use decomposed::solve_decomposed;
pub use monolithic::solve;

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot rank results of different objectives ({0} and {1})")]
    MixedObjectives(Objective, Objective),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Decomposed,
    Monolithic,
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "decomposed" => Ok(Engine::Decomposed),
            "monolithic" => Ok(Engine::Monolithic),
            _ => Err(format!("unknown engine `{s}` (expected decomposed or monolithic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub objective: Objective,
    #[serde(with = "secs")]
    pub time_limit: Duration,
    pub threads: usize,
    #[serde(default)]
    pub extra_bounds: Vec<MetricBound>,
    #[serde(default)]
    pub seed: u64,
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl SolveConfig {
    /// Fifteen minutes, one thread, seed 0, no extra bounds.
    pub fn new(objective: Objective) -> Self {
        SolveConfig { objective, time_limit: Duration::from_secs(900), threads: 1, extra_bounds: Vec::new(), seed: 0 }
    }

    pub fn with_bounds(mut self, bounds: Vec<MetricBound>) -> Self {
        self.extra_bounds = bounds;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.time_limit.is_zero() {
            return Err(SolveError::InvalidConfig("time limit must be positive".into()));
        }
        if self.threads == 0 {
            return Err(SolveError::InvalidConfig("thread count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    /// A solution without an optimality proof, such as one read back from
    /// an external solver.
    Feasible,
    Infeasible,
    TimeLimit,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Optimal => "Optimal",
            Status::Feasible => "Feasible",
            Status::Infeasible => "Infeasible",
            Status::TimeLimit => "TimeLimit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes_explored: u64,
    #[serde(with = "secs")]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub objective: Objective,
    pub status: Status,
    pub solution: Option<PlacementSolution>,
    /// Best proven bound on the objective (equal to its value when optimal).
    #[serde(with = "opt_rational")]
    pub bound: Option<Rational>,
    pub stats: SolveStats,
}

mod opt_rational {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::rational::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_str(&format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?.map(|t| parse_rational(&t).map_err(serde::de::Error::custom)).transpose()
    }
}

impl SolveResult {
    /// Objective value of the solution, if there is one.
    pub fn value(&self) -> Option<Rational> {
        self.solution.as_ref().map(|s| s.objective.metric(self.objective))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Runs the chosen engine. The monolithic engine builds the linear program first.
pub fn solve_with(engine: Engine, ctx: Arc<ProblemContext>, config: &SolveConfig) -> Result<SolveResult, SolveError> {
    match engine {
        Engine::Decomposed => solve_decomposed(&ctx, config),
        Engine::Monolithic => {
            let inst = crate::milp::build_instance(ctx).map_err(|e| SolveError::InvalidConfig(e.to_string()))?;
            solve(&inst, config)
        }
    }
}

pub(crate) fn from_min_key(ctx: &ProblemContext, objective: Objective, key: Rational) -> Rational {
    match objective {
        Objective::Remdr => ctx.nonloop_capacity - key,
        _ => key,
    }
}

pub(crate) fn log_progress(explored: u64, incumbent: Option<Rational>, bound: Option<Rational>) {
    let show = |v: Option<Rational>| v.map(|r| crate::rational::format_rational(&r)).unwrap_or_else(|| "-".into());
    log::info!("explored={explored} incumbent={} bound={}", show(incumbent), show(bound));
}

/// Sorts named results best first. Results without a solution go last;
/// ties are broken by used nodes, then latency, then name.
pub fn rank(
    results: Vec<(String, SolveResult)>,
    objective: Objective,
) -> Result<Vec<(String, SolveResult)>, SolveError> {
    if let Some((_, r)) = results.iter().find(|(_, r)| r.objective != objective) {
        return Err(SolveError::MixedObjectives(objective, r.objective));
    }
    let mut results = results;
    results.sort_by(|(na, a), (nb, b)| match (&a.solution, &b.solution) {
        (None, None) => na.cmp(nb),
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(sa), Some(sb)) => {
            let (va, vb) = (sa.objective.metric(objective), sb.objective.metric(objective));
            let by_value = if objective.maximize() { vb.cmp(&va) } else { va.cmp(&vb) };
            by_value
                .then(sa.objective.used_nodes.cmp(&sb.objective.used_nodes))
                .then(sa.objective.latency.cmp(&sb.objective.latency))
                .then(na.cmp(nb))
        }
    });
    Ok(results)
}

/// Whether solution metrics satisfy every extra bound.
pub(crate) fn bounds_hold(bounds: &[MetricBound], values: &crate::milp::ObjectiveValues) -> bool {
    bounds.iter().all(|b| b.holds(values))
}
