use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::topology::{PathOpt, Topology};
use super::{bounds_hold, from_min_key, log_progress, SolveConfig, SolveError, SolveResult, SolveStats, Status};
use crate::milp::{MetricBound, Objective, PlacementSolution, ProblemContext, Relation, Role};
use crate::rational::Rational;

/// Lower bounds on the three metrics for a partial mapping (REMDR as load).
#[derive(Debug, Clone, Copy)]
struct Lower {
    load: Rational,
    latency: Rational,
    used: u32,
}

#[derive(Debug, Clone)]
struct Best {
    key: Rational,
    mapping: Vec<usize>,
    roles: Vec<Role>,
    routes: Vec<Vec<usize>>,
}

#[derive(Clone)]
struct State {
    map: Vec<Option<usize>>,
    roles: Vec<Role>,
    res_dc: Vec<Rational>,
    res_sw: Vec<Rational>,
    /// Uses of function `f` on node `v`.
    req: Vec<Vec<u32>>,
    /// Nodes hosting function `f`.
    inst: Vec<u32>,
    /// Functions hosted on node `v`.
    funcs_on: Vec<u32>,
    used: u32,
}

struct Search<'a> {
    ctx: &'a ProblemContext,
    topo: Topology<'a>,
    objective: Objective,
    bounds: &'a [MetricBound],
    order: Vec<usize>,
    /// Node sequences and edge lists of every path of every bounded pair.
    pair_paths: Vec<(Vec<usize>, Vec<usize>)>,
    /// Indices into `pair_paths` per bound group.
    group_paths: Vec<Vec<usize>>,
    /// For each graph edge, the bound groups whose union contains it.
    groups_of_edge: Vec<Vec<usize>>,
    /// Route-option order by latency per node pair, built on first use.
    by_latency: Vec<OnceLock<Vec<usize>>>,
    deadline: Instant,
    leaves: AtomicU64,
    timed_out: AtomicBool,
    best: Mutex<Option<Best>>,
    root_bound: Rational,
}

fn int(n: u32) -> Rational {
    Rational::from_integer(n as i128)
}

impl<'a> Search<'a> {
    fn key_of(&self, lb: &Lower) -> Rational {
        match self.objective {
            Objective::Remdr => lb.load,
            Objective::Latency => lb.latency,
            Objective::UsedNodes => int(lb.used),
        }
    }

    fn cutoff(&self) -> Option<Rational> {
        self.best.lock().unwrap().as_ref().map(|b| b.key)
    }

    fn out_of_time(&self) -> bool {
        if self.timed_out.load(AtomicOrdering::Relaxed) {
            return true;
        }
        if Instant::now() >= self.deadline {
            self.timed_out.store(true, AtomicOrdering::Relaxed);
            return true;
        }
        false
    }

    /// True when no completion of a state with these lower bounds can meet
    /// the extra bounds.
    fn violates_extra(&self, lb: &Lower) -> bool {
        self.bounds.iter().any(|b| {
            let le = matches!(b.relation, Relation::Le | Relation::Eq);
            let ge = matches!(b.relation, Relation::Ge | Relation::Eq);
            match b.metric {
                Objective::UsedNodes => le && int(lb.used) > b.value,
                Objective::Latency => le && lb.latency > b.value,
                Objective::Remdr => ge && self.ctx.nonloop_capacity - lb.load < b.value,
            }
        })
    }

    fn lower(&self, st: &State) -> Option<Lower> {
        let ctx = self.ctx;
        let graph = &ctx.graph;
        let topo = &self.topo;

        let mut load = Rational::zero();
        for (p, e) in graph.edges.iter().enumerate() {
            if let (Some(x), Some(y)) = (st.map[e.from], st.map[e.to]) {
                load += ctx.dreq(p) * int(topo.exact_hops(x, y)?);
            }
        }
        // Edge-disjoint segments between mapped nodes through unmapped ones.
        let mut segments: Vec<(Rational, Vec<usize>)> = Vec::new();
        for s in 0..graph.nodes.len() {
            let Some(xs) = st.map[s] else { continue };
            for p in graph.out_edges(s) {
                if st.map[graph.edges[p].to].is_none() {
                    let mut stack = vec![p];
                    self.segments_from(st, xs, graph.edges[p].to, ctx.dreq(p), &mut stack, &mut segments)?;
                }
            }
        }
        if !segments.is_empty() {
            segments.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            let mut taken = vec![false; graph.edges.len()];
            for (value, edges) in segments {
                if edges.iter().all(|&p| !taken[p]) {
                    edges.iter().for_each(|&p| taken[p] = true);
                    load += value;
                }
            }
        }

        let mut path_lb = Vec::with_capacity(self.pair_paths.len());
        let mut latency = Rational::zero();
        for (nodes, _) in &self.pair_paths {
            let mut sum = Rational::zero();
            let mut last = 0;
            for j in 1..nodes.len() {
                if let Some(y) = st.map[nodes[j]] {
                    let x = st.map[nodes[last]].expect("pair paths start at endpoints");
                    sum += if j == last + 1 { topo.exact_latency(x, y)? } else { topo.lat[x][y]? };
                    last = j;
                }
            }
            latency += sum;
            path_lb.push(sum);
        }
        for (g, paths) in self.group_paths.iter().enumerate() {
            let worst = paths.iter().map(|&i| path_lb[i]).max().unwrap_or_default();
            if worst > ctx.bound_groups[g].bound {
                return None;
            }
        }
        Some(Lower { load, latency, used: st.used })
    }

    fn segments_from(
        &self,
        st: &State,
        xs: usize,
        w: usize,
        min_rate: Rational,
        stack: &mut Vec<usize>,
        out: &mut Vec<(Rational, Vec<usize>)>,
    ) -> Option<()> {
        let graph = &self.ctx.graph;
        for q in graph.out_edges(w) {
            let t = graph.edges[q].to;
            let rate = min_rate.min(self.ctx.dreq(q));
            stack.push(q);
            match st.map[t] {
                Some(xt) => {
                    let hops = self.topo.hops[xs][xt]?;
                    out.push((rate * int(hops), stack.clone()));
                }
                None => self.segments_from(st, xs, t, rate, stack, out)?,
            }
            stack.pop();
        }
        Some(())
    }

    fn fits(&self, st: &State, u: usize, v: usize, role: Role) -> bool {
        let ctx = self.ctx;
        let f = ctx.node_function[u].unwrap();
        let func = &ctx.catalog.functions()[f];
        let residual = if role == Role::Dc { st.res_dc[v] } else { st.res_sw[v] };
        ctx.demand(u, role) <= residual
            && st.req[f][v] < func.max_requests
            && (st.req[f][v] > 0 || st.inst[f] < func.max_instances)
    }

    fn place(&self, st: &mut State, u: usize, v: usize, role: Role) {
        let ctx = self.ctx;
        let f = ctx.node_function[u].unwrap();
        match role {
            Role::Dc => st.res_dc[v] -= ctx.demand(u, role),
            Role::Switch => st.res_sw[v] -= ctx.demand(u, role),
        }
        st.req[f][v] += 1;
        if st.req[f][v] == 1 {
            st.inst[f] += 1;
            st.funcs_on[v] += 1;
            if st.funcs_on[v] == 1 {
                st.used += 1;
            }
        }
        st.map[u] = Some(v);
        st.roles[u] = role;
    }

    fn unplace(&self, st: &mut State, u: usize, v: usize, role: Role) {
        let ctx = self.ctx;
        let f = ctx.node_function[u].unwrap();
        match role {
            Role::Dc => st.res_dc[v] += ctx.demand(u, role),
            Role::Switch => st.res_sw[v] += ctx.demand(u, role),
        }
        st.req[f][v] -= 1;
        if st.req[f][v] == 0 {
            st.inst[f] -= 1;
            st.funcs_on[v] -= 1;
            if st.funcs_on[v] == 0 {
                st.used -= 1;
            }
        }
        st.map[u] = None;
    }

    /// Feasible placements of the next use, best bound first.
    fn candidates(
        &self,
        st: &mut State,
        u: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<(Rational, Rational, u64, usize, Role)> {
        let cutoff = self.cutoff();
        let mut out = Vec::new();
        for v in 0..self.ctx.net.node_count() {
            for role in self.ctx.allowed_roles(u) {
                if !self.fits(st, u, v, role) {
                    continue;
                }
                self.place(st, u, v, role);
                if let Some(lb) = self.lower(st) {
                    let key = self.key_of(&lb);
                    if !self.violates_extra(&lb) && cutoff.is_none_or(|c| key < c) {
                        let residual = if role == Role::Dc { st.res_dc[v] } else { st.res_sw[v] };
                        out.push((key, residual, rng.gen::<u64>(), v, role));
                    }
                }
                self.unplace(st, u, v, role);
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        out
    }

    fn search(&self, depth: usize, st: &mut State, rng: &mut ChaCha8Rng) {
        if self.out_of_time() {
            return;
        }
        if depth == self.order.len() {
            self.leaf(st);
            return;
        }
        let u = self.order[depth];
        for (key, _, _, v, role) in self.candidates(st, u, rng) {
            if self.cutoff().is_some_and(|c| key >= c) {
                continue;
            }
            self.place(st, u, v, role);
            self.search(depth + 1, st, rng);
            self.unplace(st, u, v, role);
        }
    }

    fn leaf(&self, st: &State) {
        let n = self.leaves.fetch_add(1, AtomicOrdering::Relaxed) + 1;
        if n.is_multiple_of(100_000) {
            let inc = self.cutoff().map(|k| from_min_key(self.ctx, self.objective, k));
            log_progress(n, inc, Some(from_min_key(self.ctx, self.objective, self.root_bound)));
        }
        let mapping: Vec<usize> = st.map.iter().map(|m| m.unwrap()).collect();
        let fixed = if self.objective == Objective::UsedNodes { int(st.used) } else { Rational::zero() };
        let cutoff = self.cutoff().map(|c| c - fixed);
        let Some((cost, routes)) = self.route(&mapping, st.used, cutoff) else { return };
        let key = fixed + cost;
        let mut best = self.best.lock().unwrap();
        if best.as_ref().is_none_or(|b| key < b.key) {
            *best = Some(Best { key, mapping, roles: st.roles.clone(), routes });
            drop(best);
            log_progress(
                self.leaves.load(AtomicOrdering::Relaxed),
                Some(from_min_key(self.ctx, self.objective, key)),
                Some(from_min_key(self.ctx, self.objective, self.root_bound)),
            );
        }
    }

    fn latency_order(&self, x: usize, y: usize) -> &[usize] {
        let n = self.ctx.net.node_count();
        self.by_latency[x * n + y].get_or_init(|| {
            let paths = self.topo.paths(x, y);
            let mut idx: Vec<usize> = (0..paths.len()).collect();
            idx.sort_by(|&a, &b| (paths[a].latency, paths[a].hops).cmp(&(paths[b].latency, paths[b].hops)));
            idx
        })
    }

    /// Cheapest routing of a complete mapping whose cost is below `cutoff`.
    fn route(&self, mapping: &[usize], used: u32, cutoff: Option<Rational>) -> Option<(Rational, Vec<Vec<usize>>)> {
        let ctx = self.ctx;
        let m = ctx.graph.edges.len();
        let mut r = Router {
            search: self,
            options: Vec::with_capacity(m),
            order: (0..m).collect(),
            used,
            residual: ctx.net.edges().iter().map(|e| e.rate).collect(),
            group_sums: vec![Rational::zero(); ctx.bound_groups.len()],
            chosen: vec![usize::MAX; m],
            best: None,
            cutoff,
            rest_cost: Vec::new(),
            rest_load: Vec::new(),
            rest_latency: Vec::new(),
            rest_group: Vec::new(),
        };
        for (p, e) in ctx.graph.edges.iter().enumerate() {
            let (x, y) = (mapping[e.from], mapping[e.to]);
            let paths = self.topo.paths(x, y);
            if paths.is_empty() {
                return None;
            }
            let order: Vec<usize> = match self.objective {
                Objective::Latency => self.latency_order(x, y).to_vec(),
                _ => (0..paths.len()).collect(),
            };
            r.options.push((paths, order));
            let _ = p;
        }
        r.order.sort_by(|&a, &b| ctx.dreq(b).cmp(&ctx.dreq(a)).then(a.cmp(&b)));
        r.prepare();
        r.dfs(0, Rational::zero(), Rational::zero(), Rational::zero());
        r.best
    }
}

struct Router<'s, 'a> {
    search: &'s Search<'a>,
    /// Route options per graph edge and the order to try them in.
    options: Vec<(&'s [PathOpt], Vec<usize>)>,
    order: Vec<usize>,
    used: u32,
    residual: Vec<Rational>,
    group_sums: Vec<Rational>,
    chosen: Vec<usize>,
    best: Option<(Rational, Vec<Vec<usize>>)>,
    cutoff: Option<Rational>,
    /// Suffix sums, over the routing order, of per-edge minimum cost, load,
    /// weighted latency and per-group latency.
    rest_cost: Vec<Rational>,
    rest_load: Vec<Rational>,
    rest_latency: Vec<Rational>,
    rest_group: Vec<Vec<Rational>>,
}

impl Router<'_, '_> {
    fn cost(&self, p: usize, opt: &PathOpt) -> Rational {
        let ctx = self.search.ctx;
        match self.search.objective {
            Objective::Remdr => ctx.dreq(p) * int(opt.hops),
            Objective::Latency => Rational::from_integer(ctx.lat_coeff[p] as i128) * opt.latency,
            Objective::UsedNodes => Rational::zero(),
        }
    }

    fn prepare(&mut self) {
        let ctx = self.search.ctx;
        let m = self.order.len();
        let groups = ctx.bound_groups.len();
        self.rest_cost = vec![Rational::zero(); m + 1];
        self.rest_load = vec![Rational::zero(); m + 1];
        self.rest_latency = vec![Rational::zero(); m + 1];
        self.rest_group = vec![vec![Rational::zero(); m + 1]; groups];
        for k in (0..m).rev() {
            let p = self.order[k];
            let (paths, _) = &self.options[p];
            let min_cost = paths.iter().map(|o| self.cost(p, o)).min().unwrap();
            let min_hops = paths.iter().map(|o| o.hops).min().unwrap();
            let min_lat = paths.iter().map(|o| o.latency).min().unwrap();
            self.rest_cost[k] = self.rest_cost[k + 1] + min_cost;
            self.rest_load[k] = self.rest_load[k + 1] + ctx.dreq(p) * int(min_hops);
            self.rest_latency[k] =
                self.rest_latency[k + 1] + Rational::from_integer(ctx.lat_coeff[p] as i128) * min_lat;
            for g in 0..groups {
                let add = if self.search.groups_of_edge[p].contains(&g) { min_lat } else { Rational::zero() };
                self.rest_group[g][k] = self.rest_group[g][k + 1] + add;
            }
        }
    }

    fn dfs(&mut self, k: usize, cost: Rational, load: Rational, latency: Rational) {
        let search = self.search;
        if search.out_of_time() {
            return;
        }
        let limit = match (&self.best, self.cutoff) {
            (Some((b, _)), _) => Some(*b),
            (None, c) => c,
        };
        if limit.is_some_and(|l| cost + self.rest_cost[k] >= l) {
            return;
        }
        let lb = Lower { load: load + self.rest_load[k], latency: latency + self.rest_latency[k], used: self.used };
        if search.violates_extra(&lb) {
            return;
        }
        let ctx = search.ctx;
        for (g, group) in ctx.bound_groups.iter().enumerate() {
            if self.group_sums[g] + self.rest_group[g][k] > group.bound {
                return;
            }
        }
        if k == self.order.len() {
            let values =
                crate::milp::ObjectiveValues { remdr: ctx.nonloop_capacity - load, used_nodes: self.used, latency };
            if bounds_hold(search.bounds, &values) {
                let routes = (0..self.options.len()).map(|p| self.options[p].0[self.chosen[p]].edges.clone()).collect();
                self.best = Some((cost, routes));
            }
            return;
        }
        let p = self.order[k];
        let rate = ctx.dreq(p);
        let coeff = Rational::from_integer(ctx.lat_coeff[p] as i128);
        let (paths, order) = (self.options[p].0, self.options[p].1.clone());
        for i in order {
            let opt = &paths[i];
            if opt.edges.iter().any(|&e| self.residual[e] < rate) {
                continue;
            }
            opt.edges.iter().for_each(|&e| self.residual[e] -= rate);
            for &g in &search.groups_of_edge[p] {
                self.group_sums[g] += opt.latency;
            }
            self.chosen[p] = i;
            let c = self.cost(p, opt);
            self.dfs(k + 1, cost + c, load + rate * int(opt.hops), latency + coeff * opt.latency);
            opt.edges.iter().for_each(|&e| self.residual[e] += rate);
            for &g in &search.groups_of_edge[p] {
                self.group_sums[g] -= opt.latency;
            }
            // With zero-cost routing (USED_NODES) any feasible routing is optimal.
            if self.best.as_ref().is_some_and(|(b, _)| cost + self.rest_cost[k] >= *b) {
                return;
            }
        }
    }
}

/// Node sequence of a graph path given as edges.
fn path_nodes(ctx: &ProblemContext, edges: &[usize]) -> Vec<usize> {
    let g = &ctx.graph;
    let mut nodes = vec![g.edges[edges[0]].from];
    nodes.extend(edges.iter().map(|&e| g.edges[e].to));
    nodes
}

/// Mapping-then-routing branch-and-bound.
pub fn solve_decomposed(ctx: &ProblemContext, config: &SolveConfig) -> Result<SolveResult, SolveError> {
    config.validate()?;
    let start = Instant::now();
    let objective = config.objective;
    let nv = ctx.net.node_count();
    let funcs = ctx.catalog.functions();

    let demand = |u: usize| ctx.allowed_roles(u).into_iter().map(|r| ctx.demand(u, r)).max().unwrap_or_default();
    let mut order = ctx.uses.clone();
    order.sort_by(|&a, &b| demand(b).cmp(&demand(a)).then(a.cmp(&b)));

    let mut pair_paths = Vec::new();
    let mut group_paths = Vec::new();
    for g in &ctx.bound_groups {
        let mut ids = Vec::new();
        for path in &ctx.graph.pairs[g.pair].paths {
            ids.push(pair_paths.len());
            pair_paths.push((path_nodes(ctx, path), path.clone()));
        }
        group_paths.push(ids);
    }
    let mut groups_of_edge = vec![Vec::new(); ctx.graph.edges.len()];
    for (gi, g) in ctx.bound_groups.iter().enumerate() {
        for &p in &g.edges {
            groups_of_edge[p].push(gi);
        }
    }

    let mut root = State {
        map: ctx.node_location.clone(),
        roles: (0..ctx.graph.nodes.len())
            .map(|u| if ctx.is_endpoint(u) { Role::Dc } else { ctx.default_role(u) })
            .collect(),
        res_dc: ctx.net.nodes().iter().map(|n| n.dc_capacity).collect(),
        res_sw: ctx.net.nodes().iter().map(|n| n.switch_capacity).collect(),
        req: vec![vec![0; nv]; funcs.len()],
        inst: vec![0; funcs.len()],
        funcs_on: vec![0; nv],
        used: 0,
    };

    let mut search = Search {
        ctx,
        topo: Topology::new(&ctx.net),
        objective,
        bounds: &config.extra_bounds,
        order,
        pair_paths,
        group_paths,
        groups_of_edge,
        by_latency: (0..nv * nv).map(|_| OnceLock::new()).collect(),
        deadline: start + config.time_limit,
        leaves: AtomicU64::new(0),
        timed_out: AtomicBool::new(false),
        best: Mutex::new(None),
        root_bound: Rational::zero(),
    };
    let finish = |search: &Search, status: Status, bound: Option<Rational>, solution: Option<PlacementSolution>| {
        let explored = search.leaves.load(AtomicOrdering::Relaxed);
        let value = solution.as_ref().map(|s| s.objective.metric(objective));
        log_progress(explored, value, bound);
        SolveResult {
            objective,
            status,
            solution,
            bound,
            stats: SolveStats { nodes_explored: explored, wall_time: start.elapsed() },
        }
    };

    let Some(root_lb) = search.lower(&root).filter(|lb| !search.violates_extra(lb)) else {
        return Ok(finish(&search, Status::Infeasible, None, None));
    };
    search.root_bound = search.key_of(&root_lb);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let first = search.order[0];
    let cands = search.candidates(&mut root, first, &mut rng);
    let run = |i: usize, (_, _, _, v, role): (Rational, Rational, u64, usize, Role), rng: &mut ChaCha8Rng| {
        let mut st = root.clone();
        search.place(&mut st, first, v, role);
        let _ = i;
        search.search(1, &mut st, rng);
    };
    if config.threads <= 1 {
        for (i, c) in cands.into_iter().enumerate() {
            if search.cutoff().is_some_and(|b| c.0 >= b) {
                continue;
            }
            run(i, c, &mut rng);
        }
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| SolveError::InvalidConfig(e.to_string()))?;
        pool.install(|| {
            cands.into_par_iter().enumerate().for_each(|(i, c)| {
                if search.cutoff().is_some_and(|b| c.0 >= b) {
                    return;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(i as u64 + 1));
                run(i, c, &mut rng);
            });
        });
    }

    let best = search.best.lock().unwrap().clone();
    let timed_out = search.timed_out.load(AtomicOrdering::Relaxed);
    let solution = best.map(|b| {
        let roles: Vec<Role> = b.roles;
        PlacementSolution::from_parts(ctx, &b.mapping, &roles, &b.routes)
    });
    let status = match (&solution, timed_out) {
        (_, true) => Status::TimeLimit,
        (Some(_), false) => Status::Optimal,
        (None, false) => Status::Infeasible,
    };
    let bound = match status {
        Status::Optimal => solution.as_ref().map(|s| s.objective.metric(objective)),
        Status::TimeLimit => Some(from_min_key(ctx, objective, search.root_bound)),
        _ => None,
    };
    Ok(finish(&search, status, bound, solution))
}
