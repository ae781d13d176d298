use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::context::ProblemContext;
use super::solution::{objective_from, Assignment, PlacementSolution, Role};
use super::{Family, Relation};
use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Constraint family letter, or `structure` / `objective`.
    pub tag: String,
    pub indices: Vec<String>,
    pub lhs: String,
    pub relation: String,
    pub rhs: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CheckReport {
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn tags(&self) -> BTreeSet<String> {
        self.violations.iter().map(|v| v.tag.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn structure(&mut self, what: String) {
        self.violations.push(Violation {
            tag: "structure".into(),
            indices: vec![what],
            lhs: String::new(),
            relation: String::new(),
            rhs: String::new(),
        });
    }
}

struct Checker<'a> {
    ctx: &'a ProblemContext,
    report: CheckReport,
}

impl Checker<'_> {
    fn expect(&mut self, family: Family, indices: Vec<String>, lhs: Rational, rel: Relation, rhs: Rational) {
        if !rel.holds(&lhs, &rhs) {
            self.report.violations.push(Violation {
                tag: family.tag().into(),
                indices,
                lhs: format_rational(&lhs),
                relation: rel.symbol().into(),
                rhs: format_rational(&rhs),
            });
        }
    }

    fn node(&self, v: usize) -> String {
        self.ctx.net.node_id(v).to_string()
    }

    fn u(&self, u: usize) -> String {
        self.ctx.node_label(u)
    }

    fn pair(&self, p: usize) -> Vec<String> {
        let e = &self.ctx.graph.edges[p];
        vec![self.u(e.from), self.u(e.to)]
    }

    fn sub_edge(&self, e: usize) -> String {
        let (a, b) = self.ctx.net.edge_label(e);
        format!("({a},{b})")
    }
}

fn int(n: usize) -> Rational {
    Rational::from_integer(n as i128)
}

fn bit(b: bool) -> Rational {
    int(b as usize)
}

/// Evaluates every constraint family in its original (quadratic) form.
pub fn check_assignment(ctx: &ProblemContext, a: &Assignment) -> CheckReport {
    let mut c = Checker { ctx, report: CheckReport::default() };
    let net = &ctx.net;
    let graph = &ctx.graph;
    let nv = net.node_count();
    let nodes = 0..nv;
    let big_m = int(ctx.uses.len() + 1);
    let big_m2 = int(ctx.catalog.len() + 1);

    for u in 0..graph.nodes.len() {
        let sum = a.m[u].iter().filter(|&&b| b).count();
        c.expect(Family::A, vec![c.u(u)], int(sum), Relation::Eq, int(1));
    }
    for &u in &ctx.endpoints {
        let loc = ctx.node_location[u].unwrap();
        c.expect(Family::B, vec![c.u(u), c.node(loc)], bit(a.m[u][loc]), Relation::Eq, int(1));
    }
    for (f, users) in ctx.uses_of_function.iter().enumerate() {
        let fid = ctx.catalog.functions()[f].id.clone();
        for v in nodes.clone() {
            let mapped = int(users.iter().filter(|&&u| a.m[u][v]).count());
            let i = bit(a.inst[f][v]);
            c.expect(Family::C, vec![fid.clone(), c.node(v)], mapped, Relation::Le, big_m * i);
            c.expect(Family::C, vec![fid.clone(), c.node(v)], i, Relation::Le, mapped);
        }
    }
    for &u in &ctx.uses {
        for v in nodes.clone() {
            c.expect(Family::D, vec![c.u(u), c.node(v)], bit(a.ms[u][v]) + bit(a.md[u][v]), Relation::Eq, int(1));
        }
        let roles = ctx.allowed_roles(u);
        if roles == [Role::Dc] || roles == [Role::Switch] {
            let dc = roles[0] == Role::Dc;
            for v in nodes.clone() {
                let idx = vec![c.u(u), c.node(v)];
                c.expect(Family::E, idx.clone(), bit(a.ms[u][v]), Relation::Eq, bit(!dc));
                c.expect(Family::E, idx, bit(a.md[u][v]), Relation::Eq, bit(dc));
            }
        }
    }
    for v in nodes.clone() {
        let (mut dc, mut sw) = (Rational::zero(), Rational::zero());
        for &u in &ctx.uses {
            if a.m[u][v] && a.md[u][v] {
                dc += ctx.demand(u, Role::Dc);
            }
            if a.m[u][v] && a.ms[u][v] {
                sw += ctx.demand(u, Role::Switch);
            }
        }
        c.expect(Family::F, vec![c.node(v), "dc".into()], dc, Relation::Le, ctx.capacity(v, Role::Dc));
        c.expect(Family::F, vec![c.node(v), "switch".into()], sw, Relation::Le, ctx.capacity(v, Role::Switch));
    }
    for (f, func) in ctx.catalog.functions().iter().enumerate() {
        let count = a.inst[f].iter().filter(|&&b| b).count();
        c.expect(Family::G, vec![func.id.clone()], int(count), Relation::Le, int(func.max_instances as usize));
        for v in nodes.clone() {
            let mapped = ctx.uses_of_function[f].iter().filter(|&&u| a.m[u][v]).count();
            c.expect(
                Family::H,
                vec![c.node(v), func.id.clone()],
                int(mapped),
                Relation::Le,
                int(func.max_requests as usize),
            );
        }
    }

    for (p, active) in a.e.iter().enumerate() {
        let edge = &graph.edges[p];
        let (u, w) = (edge.from, edge.to);
        let mm = |x: usize, y: usize| a.m[u][x] && a.m[w][y];
        let label = |c: &Checker, x: usize, y: usize, e: usize| {
            let mut idx = vec![c.sub_edge(e), c.node(x), c.node(y)];
            idx.extend(c.pair(p));
            idx
        };
        for &(x, y, e) in active {
            c.expect(Family::I, label(&c, x, y, e), int(1), Relation::Le, bit(mm(x, y)));
        }

        let (mut start, mut not_start, mut end, mut not_end) = (0usize, 0usize, 0usize, 0usize);
        let mut layers: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for &(x, y, e) in active {
            let se = &net.edges()[e];
            if se.src == x {
                if mm(x, y) {
                    start += 1
                } else {
                    not_start += 1
                }
            }
            if se.dst == y {
                if mm(x, y) {
                    end += 1
                } else {
                    not_end += 1
                }
            }
            layers.entry((x, y)).or_default().push(e);
        }
        c.expect(Family::J, c.pair(p), int(start), Relation::Eq, int(1));
        c.expect(Family::J, c.pair(p), int(not_start), Relation::Eq, int(0));
        c.expect(Family::K, c.pair(p), int(end), Relation::Eq, int(1));
        c.expect(Family::K, c.pair(p), int(not_end), Relation::Eq, int(0));

        for (&(x, y), edges) in &layers {
            let mut idx = vec![c.node(x), c.node(y)];
            idx.extend(c.pair(p));
            if x != y {
                let into_x = edges.iter().filter(|&&e| net.edges()[e].dst == x && net.edges()[e].src != x).count();
                let out_of_y = edges.iter().filter(|&&e| net.edges()[e].src == y && net.edges()[e].dst != y).count();
                c.expect(Family::J, idx.clone(), int(into_x), Relation::Eq, int(0));
                c.expect(Family::K, idx.clone(), int(out_of_y), Relation::Eq, int(0));
            }
            for wn in nodes.clone().filter(|&wn| wn != x && wn != y) {
                let inflow = edges.iter().filter(|&&e| net.edges()[e].dst == wn).count();
                let outflow = edges.iter().filter(|&&e| net.edges()[e].src == wn).count();
                let mut widx = idx.clone();
                widx.push(c.node(wn));
                c.expect(Family::L, widx, int(inflow), Relation::Eq, int(outflow));
            }
            let set: BTreeSet<usize> = edges.iter().copied().collect();
            for &e in edges {
                let se = &net.edges()[e];
                if x != y && se.is_self_loop() {
                    c.expect(Family::M, label(&c, x, y, e), int(1), Relation::Eq, int(0));
                }
                if x == y && !se.is_self_loop() {
                    c.expect(Family::M, label(&c, x, y, e), int(1), Relation::Eq, int(0));
                }
                if !se.is_self_loop() && se.src < se.dst {
                    if let Some(back) = net.edge_between(se.dst, se.src) {
                        if set.contains(&back) {
                            c.expect(Family::M, label(&c, x, y, e), int(2), Relation::Le, int(1));
                        }
                    }
                }
            }
        }
    }

    let mut load = vec![Rational::zero(); net.edges().len()];
    let mut path_lat = vec![Rational::zero(); graph.edges.len()];
    for (p, active) in a.e.iter().enumerate() {
        for &(_, _, e) in active {
            load[e] += ctx.dreq(p);
            path_lat[p] += net.edges()[e].latency;
        }
    }
    for (e, se) in net.edges().iter().enumerate() {
        c.expect(Family::N, vec![c.sub_edge(e)], load[e], Relation::Le, se.rate);
    }
    for g in &ctx.bound_groups {
        let pair = &graph.pairs[g.pair];
        let total: Rational = g.edges.iter().map(|&p| path_lat[p]).sum();
        c.expect(Family::O, vec![c.u(pair.src), c.u(pair.dst)], total, Relation::Le, g.bound);
    }
    for v in nodes.clone() {
        let count = int((0..ctx.catalog.len()).filter(|&f| a.inst[f][v]).count());
        let used = bit(a.used[v]);
        c.expect(Family::P, vec![c.node(v)], count, Relation::Le, big_m2 * used);
        c.expect(Family::P, vec![c.node(v)], used, Relation::Le, count);
    }
    for (e, se) in net.edges().iter().enumerate() {
        c.expect(Family::Q, vec![c.sub_edge(e)], a.remdr[e], Relation::Eq, se.rate - load[e]);
    }
    for p in 0..graph.edges.len() {
        c.expect(Family::R, c.pair(p), a.lat[p], Relation::Eq, path_lat[p]);
    }
    c.report
}

/// Rebuilds the assignment a solution describes and checks it, then compares
/// the reported objective values with the ones implied by its variables.
pub fn check_solution(ctx: &ProblemContext, sol: &PlacementSolution) -> CheckReport {
    let mut report = CheckReport::default();
    let net = &ctx.net;
    let graph = &ctx.graph;
    let mut a = Assignment::zeros(ctx);

    let mut mapping = vec![None; graph.nodes.len()];
    for (u, slot) in mapping.iter_mut().enumerate() {
        let label = graph.node_label(u);
        match sol.mapping.get(&label).map(|id| (id, net.node_by_id(id))) {
            Some((_, Some(v))) => {
                *slot = Some(v);
                a.m[u][v] = true;
            }
            Some((id, None)) => report.structure(format!("{label} mapped to unknown node {id}")),
            None => report.structure(format!("{label} is not mapped")),
        }
    }
    for label in sol.mapping.keys() {
        if graph.node_by_label(label).is_none() {
            report.structure(format!("unknown graph node {label}"));
        }
    }
    for &u in &ctx.uses {
        match sol.roles.get(&graph.node_label(u)) {
            Some(role) => {
                for v in 0..net.node_count() {
                    a.ms[u][v] = *role == Role::Switch;
                    a.md[u][v] = *role == Role::Dc;
                }
            }
            None => report.structure(format!("{} has no role", graph.node_label(u))),
        }
    }
    for inst in &sol.instances {
        match (ctx.catalog.index_of(&inst.function), net.node_by_id(&inst.node)) {
            (Some(f), Some(v)) => a.inst[f][v] = true,
            _ => report.structure(format!("unknown instance {}@{}", inst.function, inst.node)),
        }
    }
    for id in &sol.used_nodes {
        match net.node_by_id(id) {
            Some(v) => a.used[v] = true,
            None => report.structure(format!("unknown used node {id}")),
        }
    }
    if sol.routes.len() != graph.edges.len() {
        report.structure(format!("{} routes for {} graph edges", sol.routes.len(), graph.edges.len()));
    }
    for (p, route) in sol.routes.iter().enumerate().take(graph.edges.len()) {
        let (from, to) = graph.edge_label(p);
        if route.from != from || route.to != to {
            report.structure(format!("route {p} is for ({},{}), expected ({from},{to})", route.from, route.to));
            continue;
        }
        a.lat[p] = route.latency;
        let (Some(x), Some(y)) = (mapping[graph.edges[p].from], mapping[graph.edges[p].to]) else { continue };
        for (s, d) in &route.edges {
            match net.node_by_id(s).zip(net.node_by_id(d)).and_then(|(s, d)| net.edge_between(s, d)) {
                Some(e) => {
                    a.e[p].insert((x, y, e));
                }
                None => report.structure(format!("route ({from},{to}) uses unknown edge ({s},{d})")),
            }
        }
    }
    let mut seen = vec![false; net.edges().len()];
    for r in &sol.remaining_rate {
        match net.node_by_id(&r.src).zip(net.node_by_id(&r.dst)).and_then(|(s, d)| net.edge_between(s, d)) {
            Some(e) => {
                a.remdr[e] = r.remaining;
                seen[e] = true;
            }
            None => report.structure(format!("remaining rate for unknown edge ({},{})", r.src, r.dst)),
        }
    }
    for (e, s) in seen.iter().enumerate() {
        if !s {
            let (x, y) = net.edge_label(e);
            report.structure(format!("no remaining rate for edge ({x},{y})"));
        }
    }
    if !report.is_clean() {
        return report;
    }

    report = check_assignment(ctx, &a);
    let implied = objective_from(ctx, &a.remdr, a.used.iter().filter(|&&b| b).count() as u32, &a.lat);
    let mut mismatch = |name: &str, reported: Rational, actual: Rational| {
        if reported != actual {
            report.violations.push(Violation {
                tag: "objective".into(),
                indices: vec![name.into()],
                lhs: format_rational(&reported),
                relation: "=".into(),
                rhs: format_rational(&actual),
            });
        }
    };
    mismatch("remdr", sol.objective.remdr, implied.remdr);
    mismatch("used_nodes", int(sol.objective.used_nodes as usize), int(implied.used_nodes as usize));
    mismatch("latency", sol.objective.latency, implied.latency);
    report
}
