//! Trade-offs between the three metrics.
//!
//! Range estimation solves once per objective. The sweep then minimizes
//! latency under caps on used nodes and floors on the remaining data rate,
//! and keeps the non-dominated results.

#[cfg(test)]
mod tests;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Duration;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::milp::{MetricBound, Objective, ObjectiveValues, PlacementSolution, ProblemContext, Relation};
use crate::rational::{self, format_rational, Rational};
use crate::solver::{solve_with, Engine, SolveConfig, SolveError, Status};

#[derive(Debug, thiserror::Error)]
pub enum ParetoError {
    #[error("no ranges exist: the {0} solve is infeasible")]
    Infeasible(Objective),
    #[error("the {0} solve ended with status {1} and no solution")]
    NoSolution(Objective, Status),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid sweep settings: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    #[serde(with = "rational::serde_str")]
    pub best: Rational,
    #[serde(with = "rational::serde_str")]
    pub worst: Rational,
}

/// Best and worst value of each metric over the three single-objective optima.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricRanges {
    pub remdr: Range,
    pub used_nodes: Range,
    pub latency: Range,
}

impl MetricRanges {
    pub fn get(&self, m: Objective) -> &Range {
        match m {
            Objective::Remdr => &self.remdr,
            Objective::UsedNodes => &self.used_nodes,
            Objective::Latency => &self.latency,
        }
    }

    fn of(values: &[ObjectiveValues]) -> MetricRanges {
        let range = |m: Objective| {
            let vals = values.iter().map(|v| v.metric(m));
            let (lo, hi) = (vals.clone().min().unwrap(), vals.max().unwrap());
            if m.maximize() {
                Range { best: hi, worst: lo }
            } else {
                Range { best: lo, worst: hi }
            }
        };
        MetricRanges {
            remdr: range(Objective::Remdr),
            used_nodes: range(Objective::UsedNodes),
            latency: range(Objective::Latency),
        }
    }
}

/// How remaining-rate floors are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grid {
    /// This many floors spread evenly over the estimated range, with used
    /// nodes capped at every integer of its range.
    Uniform(u32),
    /// Raises the floor just above each optimum found until nothing is left,
    /// for every used-node cap up to the number of substrate nodes. Finds
    /// every non-dominated metric triple.
    Exact,
}

impl Default for Grid {
    fn default() -> Self {
        Grid::Uniform(8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub grid: Grid,
    pub engine: Engine,
    pub threads: usize,
    /// Per solve.
    #[serde(with = "secs")]
    pub time_limit: Duration,
    pub seed: u64,
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Duration::try_from_secs_f64(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            grid: Grid::default(),
            engine: Engine::Decomposed,
            threads: 1,
            time_limit: Duration::from_secs(900),
            seed: 0,
        }
    }
}

impl SweepOptions {
    fn solve_config(&self, objective: Objective, bounds: Vec<MetricBound>) -> SolveConfig {
        SolveConfig { objective, time_limit: self.time_limit, threads: 1, extra_bounds: bounds, seed: self.seed }
    }

    fn validate(&self) -> Result<(), ParetoError> {
        if self.threads == 0 {
            return Err(ParetoError::InvalidGrid("thread count must be positive".into()));
        }
        if self.grid == Grid::Uniform(0) {
            return Err(ParetoError::InvalidGrid("the remaining-rate grid needs at least one step".into()));
        }
        Ok(())
    }

    fn pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(self.threads).build().expect("thread pool")
    }
}

/// The sweep cell that produced a point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub used_cap: u32,
    #[serde(with = "opt_rational")]
    pub remdr_floor: Option<Rational>,
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

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub solution_id: String,
    pub values: ObjectiveValues,
    pub cell: Cell,
    pub status: Status,
    pub solution: PlacementSolution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub points: Vec<ParetoPoint>,
}

/// `p` is at least as good as `q` everywhere and better somewhere.
pub fn dominates(p: &ObjectiveValues, q: &ObjectiveValues) -> bool {
    let weakly = p.remdr >= q.remdr && p.used_nodes <= q.used_nodes && p.latency <= q.latency;
    weakly && p != q
}

/// Output order: remaining rate descending, then used nodes, then latency.
fn metric_order(a: &ObjectiveValues, b: &ObjectiveValues) -> Ordering {
    b.remdr.cmp(&a.remdr).then(a.used_nodes.cmp(&b.used_nodes)).then(a.latency.cmp(&b.latency))
}

/// Drops dominated and repeated triples. The first of equal triples wins.
pub fn non_dominated(values: &[ObjectiveValues]) -> Vec<usize> {
    let mut keep = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, v) in values.iter().enumerate() {
        if values.iter().any(|w| dominates(w, v)) {
            continue;
        }
        if seen.insert((v.remdr, v.used_nodes, v.latency)) {
            keep.push(i);
        }
    }
    keep
}

/// One solve per objective; records all three metrics of each optimum.
pub fn estimate_ranges(ctx: &Arc<ProblemContext>, opts: &SweepOptions) -> Result<MetricRanges, ParetoError> {
    opts.validate()?;
    let results: Vec<_> = opts.pool().install(|| {
        Objective::ALL
            .par_iter()
            .map(|&obj| solve_with(opts.engine, ctx.clone(), &opts.solve_config(obj, Vec::new())).map(|r| (obj, r)))
            .collect()
    });
    let mut values = Vec::new();
    for r in results {
        let (obj, r) = r?;
        match r.solution {
            Some(s) => {
                let report = crate::milp::check_solution(ctx, &s);
                if !report.is_clean() {
                    log::warn!("{obj} optimum fails the checker: {:?}", report.tags());
                }
                values.push(s.objective)
            }
            None if r.status == Status::Infeasible => return Err(ParetoError::Infeasible(obj)),
            None => return Err(ParetoError::NoSolution(obj, r.status)),
        }
    }
    Ok(MetricRanges::of(&values))
}

struct Found {
    cell: Cell,
    status: Status,
    solution: PlacementSolution,
}

fn bounds_of(cell: &Cell) -> Vec<MetricBound> {
    let mut b =
        vec![MetricBound::new(Objective::UsedNodes, Relation::Le, Rational::from_integer(cell.used_cap as i128))];
    if let Some(r) = cell.remdr_floor {
        b.push(MetricBound::new(Objective::Remdr, Relation::Ge, r));
    }
    b
}

fn solve_cell(ctx: &Arc<ProblemContext>, opts: &SweepOptions, cell: Cell) -> Result<Option<Found>, ParetoError> {
    let cfg = opts.solve_config(Objective::Latency, bounds_of(&cell));
    let r = solve_with(opts.engine, ctx.clone(), &cfg)?;
    match (r.solution, r.status) {
        (Some(solution), status) => {
            if status != Status::Optimal {
                log::warn!("cell {cell:?} stopped with {status}; keeping its incumbent");
            }
            Ok(Some(Found { cell, status, solution }))
        }
        (None, status) => {
            log::info!("cell {cell:?} skipped: {status}");
            Ok(None)
        }
    }
}

/// Floors between the range ends, worst first.
fn uniform_floors(range: &Range, steps: u32) -> Vec<Rational> {
    if steps == 1 || range.best == range.worst {
        return vec![range.worst];
    }
    let n = Rational::from_integer(steps as i128 - 1);
    let span = range.best - range.worst;
    let mut v: Vec<Rational> = (0..steps).map(|i| range.worst + span * Rational::from_integer(i as i128) / n).collect();
    v.dedup();
    v
}

/// Epsilon-constraint sweep with latency as the scalarized objective.
pub fn sweep(
    ctx: &Arc<ProblemContext>,
    ranges: &MetricRanges,
    opts: &SweepOptions,
) -> Result<ParetoFront, ParetoError> {
    opts.validate()?;
    let used_lo = ranges.used_nodes.best.to_integer().max(0) as u32;
    let found: Vec<Found> = match opts.grid {
        Grid::Uniform(steps) => {
            let used_hi = ranges.used_nodes.worst.to_integer() as u32;
            let floors = uniform_floors(&ranges.remdr, steps);
            let cells: Vec<Cell> = (used_lo..=used_hi)
                .flat_map(|k| floors.iter().map(move |&r| Cell { used_cap: k, remdr_floor: Some(r) }))
                .collect();
            let out: Result<Vec<_>, _> =
                opts.pool().install(|| cells.into_par_iter().map(|c| solve_cell(ctx, opts, c)).collect());
            out?.into_iter().flatten().collect()
        }
        Grid::Exact => {
            let used_hi = ctx.net.node_count().min(ctx.uses.len()) as u32;
            // Remaining rates of different placements differ by multiples of this.
            let dreqs: Vec<Rational> = (0..ctx.graph.edges.len()).map(|p| ctx.dreq(p)).collect();
            let step = rational::rational_gcd(&dreqs).filter(|g| !g.is_zero()).unwrap_or_else(Rational::one);
            let chains: Result<Vec<Vec<Found>>, ParetoError> = opts.pool().install(|| {
                (used_lo.min(used_hi)..=used_hi)
                    .into_par_iter()
                    .map(|k| {
                        let mut out = Vec::new();
                        let mut cell = Cell { used_cap: k, remdr_floor: None };
                        while let Some(f) = solve_cell(ctx, opts, cell.clone())? {
                            let next = f.solution.objective.remdr + step;
                            out.push(f);
                            cell = Cell { used_cap: k, remdr_floor: Some(next) };
                        }
                        Ok(out)
                    })
                    .collect()
            });
            chains?.into_iter().flatten().collect()
        }
    };
    Ok(front_of(found))
}

fn front_of(mut found: Vec<Found>) -> ParetoFront {
    found.sort_by(|a, b| metric_order(&a.solution.objective, &b.solution.objective).then(a.cell.cmp(&b.cell)));
    let values: Vec<ObjectiveValues> = found.iter().map(|f| f.solution.objective.clone()).collect();
    let keep: BTreeSet<usize> = non_dominated(&values).into_iter().collect();
    let points = found
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .enumerate()
        .map(|(n, (_, f))| ParetoPoint {
            solution_id: format!("p{n}"),
            values: f.solution.objective.clone(),
            cell: f.cell,
            status: f.status,
            solution: f.solution,
        })
        .collect();
    ParetoFront { points }
}

impl ParetoFront {
    pub fn triples(&self) -> Vec<(Rational, u32, Rational)> {
        self.points.iter().map(|p| (p.values.remdr, p.values.used_nodes, p.values.latency)).collect()
    }

    /// `remdr,used_nodes,latency,solution_id`, one row per point.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("remdr,used_nodes,latency,solution_id\n");
        for p in &self.points {
            s.push_str(&format!(
                "{},{},{},{}\n",
                format_rational(&p.values.remdr),
                p.values.used_nodes,
                format_rational(&p.values.latency),
                p.solution_id
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("front serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
