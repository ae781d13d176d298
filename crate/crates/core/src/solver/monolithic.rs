use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::time::Instant;

use num_integer::Integer;
use num_traits::{One, Zero};

use super::{log_progress, SolveConfig, SolveError, SolveResult, SolveStats, Status};
use crate::milp::{PlacementInstance, PlacementSolution, ProblemContext, Relation, Role, VarKind, VarMeta};
use crate::rational::Rational;

/// Affine expression over binaries: constant plus terms.
#[derive(Debug, Clone, Default)]
struct Affine {
    constant: Rational,
    terms: BTreeMap<usize, Rational>,
}

impl Affine {
    fn add_term(&mut self, var: usize, c: Rational, defs: &HashMap<usize, Affine>) {
        match defs.get(&var) {
            Some(def) => {
                self.constant += c * def.constant;
                for (&v, &d) in &def.terms {
                    *self.terms.entry(v).or_insert_with(Rational::zero) += c * d;
                }
            }
            None => *self.terms.entry(var).or_insert_with(Rational::zero) += c,
        }
    }

    fn of(terms: &[(usize, Rational)], defs: &HashMap<usize, Affine>) -> Affine {
        let mut a = Affine::default();
        for &(v, c) in terms {
            a.add_term(v, c, defs);
        }
        a.terms.retain(|_, c| !c.is_zero());
        a
    }
}

/// `sum(terms) <= rhs` with integer coefficients over binary indices.
struct IntRow {
    terms: Vec<(usize, i128)>,
    rhs: i128,
    max_abs: i128,
}

fn scaled(terms: &BTreeMap<usize, Rational>, rhs: Rational) -> (Vec<(usize, i128)>, i128) {
    let lcm = terms.values().chain([&rhs]).fold(1i128, |acc, c| acc.lcm(c.denom()));
    let s = Rational::from_integer(lcm);
    let t = terms.iter().map(|(&v, &c)| (v, (c * s).to_integer())).filter(|&(_, c)| c != 0).collect();
    (t, (rhs * s).to_integer())
}

struct Bb<'i> {
    inst: &'i PlacementInstance,
    /// Instance variable of each binary index, and the reverse map.
    bin_var: Vec<usize>,
    var_bin: Vec<Option<usize>>,
    rows: Vec<IntRow>,
    cols: Vec<Vec<(usize, i128)>>,
    obj: Vec<i128>,
    val: Vec<i8>,
    min_act: Vec<i128>,
    obj_min: i128,
    trail: Vec<usize>,
    queue: Vec<usize>,
    queued: Vec<bool>,
    // Structure used for branching and bounding.
    m: Vec<Vec<Option<usize>>>,
    md: Vec<Vec<Option<usize>>>,
    layers: Vec<HashMap<(usize, usize), Vec<(usize, usize)>>>,
    hops: Vec<Vec<Option<u32>>>,
    path_bound: bool,
}

impl Bb<'_> {
    fn ctx(&self) -> &ProblemContext {
        &self.inst.ctx
    }

    fn enqueue(&mut self, r: usize) {
        if !self.queued[r] {
            self.queued[r] = true;
            self.queue.push(r);
        }
    }

    fn fix(&mut self, b: usize, x: i8) {
        debug_assert_eq!(self.val[b], -1);
        self.val[b] = x;
        self.trail.push(b);
        let xi = x as i128;
        for k in 0..self.cols[b].len() {
            let (r, a) = self.cols[b][k];
            self.min_act[r] += if a < 0 { a * xi - a } else { a * xi };
            self.enqueue(r);
        }
        let c = self.obj[b];
        self.obj_min += if c < 0 { c * xi - c } else { c * xi };
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let b = self.trail.pop().unwrap();
            let xi = self.val[b] as i128;
            for &(r, a) in &self.cols[b] {
                self.min_act[r] -= if a < 0 { a * xi - a } else { a * xi };
            }
            let c = self.obj[b];
            self.obj_min -= if c < 0 { c * xi - c } else { c * xi };
            self.val[b] = -1;
        }
        for &r in &self.queue {
            self.queued[r] = false;
        }
        self.queue.clear();
    }

    fn propagate(&mut self) -> bool {
        while let Some(r) = self.queue.pop() {
            self.queued[r] = false;
            let slack = self.rows[r].rhs - self.min_act[r];
            if slack < 0 {
                for &q in &self.queue {
                    self.queued[q] = false;
                }
                self.queue.clear();
                return false;
            }
            if self.rows[r].max_abs <= slack {
                continue;
            }
            for k in 0..self.rows[r].terms.len() {
                let (b, a) = self.rows[r].terms[k];
                if self.val[b] == -1 && a.abs() > slack {
                    self.fix(b, if a > 0 { 0 } else { 1 });
                }
            }
        }
        true
    }

    fn is(&self, b: Option<usize>, x: i8) -> bool {
        b.is_some_and(|b| self.val[b] == x)
    }

    fn mapped(&self, u: usize) -> Option<usize> {
        (0..self.m[u].len()).find(|&v| self.is(self.m[u][v], 1))
    }

    /// Walks fixed-on edges of graph edge `p` from `x` in layer `(x, y)`.
    /// Returns the node reached, or `None` once the path is complete.
    fn walk(&self, p: usize, x: usize, y: usize) -> Option<(usize, &[(usize, usize)])> {
        let vars = self.layers[p].get(&(x, y))?;
        let edges = self.ctx().net.edges();
        if x == y {
            return vars
                .iter()
                .any(|&(_, b)| self.val[b] == 1)
                .then_some(())
                .map_or(Some((x, vars.as_slice())), |_| None);
        }
        let mut cur = x;
        let mut steps = 0;
        while cur != y && steps <= vars.len() {
            match vars.iter().find(|&&(e, b)| self.val[b] == 1 && edges[e].src == cur) {
                Some(&(e, _)) => cur = edges[e].dst,
                None => return Some((cur, vars.as_slice())),
            }
            steps += 1;
        }
        if cur == y {
            None
        } else {
            Some((cur, vars.as_slice()))
        }
    }

    /// Next branching variable, the value to try first, and whether the
    /// other value needs exploring at all.
    fn select(&self) -> Option<(usize, i8, bool)> {
        let ctx = self.ctx();
        let nv = ctx.net.node_count();
        for u in 0..self.m.len() {
            if self.mapped(u).is_none() {
                if let Some(b) = self.m[u].iter().flatten().copied().find(|&b| self.val[b] == -1) {
                    return Some((b, 1, true));
                }
            }
        }
        for &u in &ctx.uses {
            let dc_first = ctx.default_role(u) == Role::Dc;
            for v in 0..nv {
                let Some(b) = self.md[u][v] else { continue };
                if self.val[b] != -1 {
                    continue;
                }
                // Roles on nodes a use is not mapped to never matter.
                let on = self.is(self.m[u][v], 1);
                return Some((b, dc_first as i8, on));
            }
        }
        let edges = ctx.net.edges();
        for p in 0..self.layers.len() {
            let g = &ctx.graph.edges[p];
            let (Some(x), Some(y)) = (self.mapped(g.from), self.mapped(g.to)) else { continue };
            let Some((cur, vars)) = self.walk(p, x, y) else { continue };
            let best = vars
                .iter()
                .filter(|&&(e, b)| self.val[b] == -1 && edges[e].src == cur)
                .min_by_key(|&&(e, b)| (self.hops[edges[e].dst][y].unwrap_or(u32::MAX), self.obj[b], e));
            if let Some(&(_, b)) = best {
                return Some((b, 1, true));
            }
        }
        self.val.iter().position(|&x| x == -1).map(|b| (b, 0, true))
    }

    /// Fixed objective part plus, per graph edge with both ends mapped, the
    /// cheapest way to finish its path with edges still allowed.
    fn bound(&self) -> Option<i128> {
        let mut total = self.obj_min;
        if !self.path_bound {
            return Some(total);
        }
        let ctx = self.ctx();
        let edges = ctx.net.edges();
        let nv = ctx.net.node_count();
        for p in 0..self.layers.len() {
            let g = &ctx.graph.edges[p];
            let (Some(x), Some(y)) = (self.mapped(g.from), self.mapped(g.to)) else { continue };
            let vars = self.layers[p].get(&(x, y))?;
            let cost = |b: usize| if self.val[b] == 1 { 0 } else { self.obj[b] };
            if x == y {
                let &(_, b) = vars.iter().find(|&&(e, b)| edges[e].is_self_loop() && self.val[b] != 0)?;
                total += cost(b);
                continue;
            }
            let mut dist = vec![i128::MAX; nv];
            let mut heap = BinaryHeap::new();
            dist[x] = 0;
            heap.push(Reverse((0i128, x)));
            while let Some(Reverse((d, v))) = heap.pop() {
                if d > dist[v] {
                    continue;
                }
                if v == y {
                    break;
                }
                for &(e, b) in vars {
                    if edges[e].src == v && self.val[b] != 0 && !edges[e].is_self_loop() {
                        let nd = d + cost(b);
                        let w = edges[e].dst;
                        if nd < dist[w] {
                            dist[w] = nd;
                            heap.push(Reverse((nd, w)));
                        }
                    }
                }
            }
            if dist[y] == i128::MAX {
                return None;
            }
            total += dist[y];
        }
        Some(total)
    }
}

/// Branch-and-bound with propagation on the linearized program.
///
/// Continuous variables are substituted out through their defining rows, so
/// the search runs over binaries only, in exact integer arithmetic. Mapping
/// variables are branched first, then paths are grown edge by edge from
/// their source. Single-threaded regardless of `config.threads`.
pub fn solve(inst: &PlacementInstance, config: &SolveConfig) -> Result<SolveResult, SolveError> {
    config.validate()?;
    let start = Instant::now();
    let deadline = start + config.time_limit;
    let objective = config.objective;
    let ctx = inst.ctx.clone();

    // Definitions of continuous variables from their equality rows.
    let mut defs: HashMap<usize, Affine> = HashMap::new();
    let mut def_rows = vec![false; inst.rows.len()];
    for (ri, row) in inst.rows.iter().enumerate() {
        if row.relation != Relation::Eq {
            continue;
        }
        let cont: Vec<(usize, Rational)> =
            row.terms.iter().copied().filter(|&(v, _)| inst.vars[v].kind == VarKind::Continuous).collect();
        if let [(c, coef)] = cont[..] {
            if defs.contains_key(&c) {
                continue;
            }
            let mut a = Affine { constant: row.rhs / coef, terms: BTreeMap::new() };
            for &(v, k) in &row.terms {
                if v != c {
                    *a.terms.entry(v).or_insert_with(Rational::zero) -= k / coef;
                }
            }
            defs.insert(c, a);
            def_rows[ri] = true;
        }
    }
    if let Some(v) = inst.vars.iter().enumerate().find(|(i, v)| v.kind == VarKind::Continuous && !defs.contains_key(i))
    {
        return Err(SolveError::InvalidConfig(format!("continuous variable `{}` has no defining row", v.1.name)));
    }

    let mut var_bin = vec![None; inst.vars.len()];
    let mut bin_var = Vec::new();
    for (i, v) in inst.vars.iter().enumerate() {
        if v.kind == VarKind::Binary {
            var_bin[i] = Some(bin_var.len());
            bin_var.push(i);
        }
    }
    let nb = bin_var.len();

    let mut constraints: Vec<(Affine, Relation, Rational)> = Vec::new();
    for (ri, row) in inst.rows.iter().enumerate() {
        if !def_rows[ri] {
            constraints.push((Affine::of(&row.terms, &defs), row.relation, row.rhs));
        }
    }
    for (c, def) in &defs {
        let var = &inst.vars[*c];
        let expr = Affine { constant: Rational::zero(), terms: def.terms.clone() };
        constraints.push((expr.clone(), Relation::Ge, var.lower - def.constant));
        constraints.push((expr, Relation::Le, var.upper - def.constant));
    }
    for b in &config.extra_bounds {
        let expr = Affine::of(inst.objective(b.metric), &defs);
        let rhs = b.value - expr.constant;
        constraints.push((Affine { constant: Rational::zero(), terms: expr.terms }, b.relation, rhs));
    }

    let mut rows = Vec::new();
    for (expr, rel, rhs) in constraints {
        let terms: BTreeMap<usize, Rational> =
            expr.terms.iter().map(|(&v, &c)| (var_bin[v].expect("binary after substitution"), c)).collect();
        let rhs = rhs - expr.constant;
        let (t, r) = scaled(&terms, rhs);
        if matches!(rel, Relation::Le | Relation::Eq) {
            rows.push((t.clone(), r));
        }
        if matches!(rel, Relation::Ge | Relation::Eq) {
            rows.push((t.iter().map(|&(v, c)| (v, -c)).collect(), -r));
        }
    }
    let rows: Vec<IntRow> = rows
        .into_iter()
        .map(|(terms, rhs): (Vec<(usize, i128)>, i128)| {
            let max_abs = terms.iter().map(|t| t.1.abs()).max().unwrap_or(0);
            IntRow { terms, rhs, max_abs }
        })
        .collect();
    let mut cols = vec![Vec::new(); nb];
    for (r, row) in rows.iter().enumerate() {
        for &(b, a) in &row.terms {
            cols[b].push((r, a));
        }
    }

    // Objective as a minimization over binaries, scaled to integers.
    let sense = if objective.maximize() { -Rational::one() } else { Rational::one() };
    let obj_expr = Affine::of(inst.objective(objective), &defs);
    let obj_terms: BTreeMap<usize, Rational> =
        obj_expr.terms.iter().map(|(&v, &c)| (var_bin[v].unwrap(), c * sense)).collect();
    let obj_scale = obj_terms.values().fold(1i128, |acc, c| acc.lcm(c.denom()));
    let mut obj = vec![0i128; nb];
    for (&b, &c) in &obj_terms {
        obj[b] = (c * Rational::from_integer(obj_scale)).to_integer();
    }
    let to_value = |key: i128| sense * (obj_expr.constant * sense + Rational::new(key, obj_scale));

    let n = ctx.graph.nodes.len();
    let nv = ctx.net.node_count();
    let mut m = vec![vec![None; nv]; n];
    let mut md = vec![vec![None; nv]; n];
    let mut layers = vec![HashMap::new(); ctx.graph.edges.len()];
    for (i, var) in inst.vars.iter().enumerate() {
        match var.meta {
            VarMeta::M { u, v } => m[u][v] = var_bin[i],
            VarMeta::Md { u, v } => md[u][v] = var_bin[i],
            VarMeta::E { p, x, y, edge } => {
                layers[p].entry((x, y)).or_insert_with(Vec::new).push((edge, var_bin[i].unwrap()))
            }
            _ => {}
        }
    }
    let topo = super::topology::Topology::new(&ctx.net);
    let path_bound = inst
        .vars
        .iter()
        .enumerate()
        .all(|(i, v)| !matches!(v.meta, VarMeta::E { .. }) || obj[var_bin[i].unwrap()] >= 0);

    let mut min_act: Vec<i128> = rows.iter().map(|r| r.terms.iter().map(|&(_, a)| a.min(0)).sum()).collect();
    let obj_min = obj.iter().map(|&c| c.min(0)).sum();
    min_act.shrink_to_fit();
    let nrows = rows.len();
    let mut bb = Bb {
        inst,
        bin_var,
        var_bin,
        rows,
        cols,
        obj,
        val: vec![-1; nb],
        min_act,
        obj_min,
        trail: Vec::new(),
        queue: (0..nrows).collect(),
        queued: vec![true; nrows],
        m,
        md,
        layers,
        hops: topo.hops.clone(),
        path_bound,
    };

    let mut explored = 0u64;
    let mut incumbent: Option<(i128, Vec<i8>)> = None;
    let mut timed_out = false;
    let root_ok = bb.propagate();
    let root_bound = if root_ok { bb.bound() } else { None };
    let mut stack: Vec<(usize, usize, Option<i8>)> = Vec::new();
    if root_ok && root_bound.is_some() {
        loop {
            explored += 1;
            if explored.is_multiple_of(1024) && Instant::now() >= deadline {
                timed_out = true;
                break;
            }
            if explored.is_multiple_of(1_000_000) {
                log_progress(explored, incumbent.as_ref().map(|i| to_value(i.0)), root_bound.map(&to_value));
            }
            let mut descend = false;
            if bb.propagate() {
                if let Some(lb) = bb.bound() {
                    if incumbent.as_ref().is_none_or(|(k, _)| lb < *k) {
                        match bb.select() {
                            Some((b, x, alt)) => {
                                stack.push((bb.trail.len(), b, alt.then_some(1 - x)));
                                bb.fix(b, x);
                                descend = true;
                            }
                            None => {
                                incumbent = Some((bb.obj_min, bb.val.clone()));
                                log_progress(explored, Some(to_value(bb.obj_min)), root_bound.map(&to_value));
                            }
                        }
                    }
                }
            }
            if descend {
                continue;
            }
            let mut resumed = false;
            while let Some((mark, b, alt)) = stack.pop() {
                bb.undo_to(mark);
                if let Some(x) = alt {
                    stack.push((mark, b, None));
                    bb.fix(b, x);
                    resumed = true;
                    break;
                }
            }
            if !resumed {
                break;
            }
        }
    }

    let solution = incumbent.as_ref().map(|(_, vals)| {
        let mut values = vec![Rational::zero(); inst.vars.len()];
        for (b, &x) in vals.iter().enumerate() {
            values[bb.bin_var[b]] = Rational::from_integer(x as i128);
        }
        let mut a = inst.assignment_of(&values);
        a.recompute_continuous(&ctx);
        PlacementSolution::from_assignment(&ctx, &a)
    });
    let status = match (&solution, timed_out) {
        (_, true) => Status::TimeLimit,
        (Some(_), false) => Status::Optimal,
        (None, false) => Status::Infeasible,
    };
    let bound = match status {
        Status::Optimal => incumbent.as_ref().map(|(k, _)| to_value(*k)),
        Status::TimeLimit => root_bound.map(&to_value),
        _ => None,
    };
    log_progress(explored, incumbent.as_ref().map(|(k, _)| to_value(*k)), bound);
    let _ = &bb.var_bin;
    Ok(SolveResult {
        objective,
        status,
        solution,
        bound,
        stats: SolveStats { nodes_explored: explored, wall_time: start.elapsed() },
    })
}
