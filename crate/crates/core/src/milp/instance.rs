use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::context::ProblemContext;
use super::solution::Assignment;
use super::{BuildError, Family, MetricBound, Objective, Relation};
use crate::rational::Rational;

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Binary,
    Continuous,
}

/// What a variable stands for, in context indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarMeta {
    M {
        u: usize,
        v: usize,
    },
    Ms {
        u: usize,
        v: usize,
    },
    Md {
        u: usize,
        v: usize,
    },
    I {
        f: usize,
        v: usize,
    },
    /// Substrate edge `edge` on the path of graph edge `p` laid out between `x` and `y`.
    E {
        p: usize,
        x: usize,
        y: usize,
        edge: usize,
    },
    Used(usize),
    Remdr(usize),
    Lat(usize),
    /// `m[from(p)][x] * m[to(p)][y]`.
    Mm {
        p: usize,
        x: usize,
        y: usize,
    },
    /// `m[u][v] * md[u][v]`.
    ProdMd {
        u: usize,
        v: usize,
    },
    ProdMs {
        u: usize,
        v: usize,
    },
    /// Any other product made through [`linearize_product`].
    Product {
        x: VarId,
        y: VarId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
    pub lower: Rational,
    pub upper: Rational,
    pub meta: VarMeta,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub terms: Vec<(VarId, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
    pub tag: Family,
    pub label: String,
}

impl Row {
    pub fn activity(&self, values: &[Rational]) -> Rational {
        self.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }

    pub fn holds(&self, values: &[Rational]) -> bool {
        self.relation.holds(&self.activity(values), &self.rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Create `e` variables only where they can be nonzero.
    pub prune: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { prune: true }
    }
}

/// The linearized 0-1 program.
#[derive(Debug, Clone)]
pub struct PlacementInstance {
    pub ctx: Arc<ProblemContext>,
    pub vars: Vec<Var>,
    pub rows: Vec<Row>,
    pub var_index: HashMap<String, VarId>,
    /// Linear expression of each objective, in [`Objective::ALL`] order.
    pub objectives: [Vec<(VarId, Rational)>; 3],
    products: HashMap<(VarId, VarId), VarId>,
    meta_index: HashMap<VarMeta, VarId>,
}

/// Variable-name fragment of a graph node label. Ids never contain `.`, so
/// the mapping stays injective.
fn frag(label: &str) -> String {
    label.replace(['/', '#'], ".")
}

impl PlacementInstance {
    fn add_var(
        &mut self,
        name: String,
        kind: VarKind,
        lower: Rational,
        upper: Rational,
        meta: VarMeta,
    ) -> Result<VarId, BuildError> {
        let id = self.vars.len();
        if self.var_index.insert(name.clone(), id).is_some() {
            return Err(BuildError::NameCollision(name));
        }
        self.meta_index.insert(meta, id);
        self.vars.push(Var { name, kind, lower, upper, meta });
        Ok(id)
    }

    fn binary(&mut self, name: String, meta: VarMeta) -> Result<VarId, BuildError> {
        self.add_var(name, VarKind::Binary, Rational::zero(), Rational::one(), meta)
    }

    fn row(&mut self, tag: Family, label: String, terms: Vec<(VarId, Rational)>, relation: Relation, rhs: Rational) {
        self.rows.push(Row { terms, relation, rhs, tag, label });
    }

    pub fn var(&self, meta: VarMeta) -> Option<VarId> {
        self.meta_index.get(&meta).copied()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn objective(&self, obj: Objective) -> &[(VarId, Rational)] {
        &self.objectives[obj as usize]
    }

    pub fn binary_count(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn count_vars(&self, pred: impl Fn(&VarMeta) -> bool) -> usize {
        self.vars.iter().filter(|v| pred(&v.meta)).count()
    }

    /// Appends a row bounding one objective expression.
    pub fn add_metric_bound(&mut self, bound: &MetricBound) {
        let terms = self.objective(bound.metric).to_vec();
        let label = format!("{}{}{}", bound.metric, bound.relation, crate::rational::format_rational(&bound.value));
        self.row(Family::Bound, label, terms, bound.relation, bound.value);
    }

    /// Indices of rows (and out-of-bounds variables, reported as `None`) a
    /// full variable vector violates.
    pub fn violated_rows(&self, values: &[Rational]) -> Vec<usize> {
        (0..self.rows.len()).filter(|&r| !self.rows[r].holds(values)).collect()
    }

    pub fn is_feasible(&self, values: &[Rational]) -> bool {
        values.len() == self.vars.len()
            && self.vars.iter().zip(values).all(|(var, x)| {
                *x >= var.lower && *x <= var.upper && (var.kind == VarKind::Continuous || x.is_integer())
            })
            && self.rows.iter().all(|r| r.holds(values))
    }

    pub fn objective_value(&self, obj: Objective, values: &[Rational]) -> Rational {
        self.objective(obj).iter().map(|&(v, c)| c * values[v]).sum()
    }

    /// Variable vector of an assignment, auxiliaries set to their products.
    /// Fails when the assignment activates an `e` variable that was pruned.
    pub fn values_of(&self, a: &Assignment) -> Result<Vec<Rational>, String> {
        for (p, set) in a.e.iter().enumerate() {
            for &(x, y, edge) in set {
                if self.var(VarMeta::E { p, x, y, edge }).is_none() {
                    return Err(format!("no variable for edge {edge} of graph edge {p} in layer ({x},{y})"));
                }
            }
        }
        let b = |v: bool| if v { Rational::one() } else { Rational::zero() };
        let mut values: Vec<Rational> = Vec::with_capacity(self.vars.len());
        for var in &self.vars {
            let x = match var.meta {
                VarMeta::M { u, v } => b(a.m[u][v]),
                VarMeta::Ms { u, v } => b(a.ms[u][v]),
                VarMeta::Md { u, v } => b(a.md[u][v]),
                VarMeta::I { f, v } => b(a.inst[f][v]),
                VarMeta::E { p, x, y, edge } => b(a.e[p].contains(&(x, y, edge))),
                VarMeta::Used(v) => b(a.used[v]),
                VarMeta::Remdr(e) => a.remdr[e],
                VarMeta::Lat(p) => a.lat[p],
                VarMeta::Mm { p, x, y } => {
                    let edge = &self.ctx.graph.edges[p];
                    b(a.m[edge.from][x] && a.m[edge.to][y])
                }
                VarMeta::ProdMd { u, v } => b(a.m[u][v] && a.md[u][v]),
                VarMeta::ProdMs { u, v } => b(a.m[u][v] && a.ms[u][v]),
                VarMeta::Product { x, y } => values[x] * values[y],
            };
            values.push(x);
        }
        Ok(values)
    }

    /// Reads the original variables back out of a variable vector.
    /// Binaries are taken as `value > 1/2`.
    pub fn assignment_of(&self, values: &[Rational]) -> Assignment {
        let mut a = Assignment::zeros(&self.ctx);
        let half = Rational::new(1, 2);
        for (var, x) in self.vars.iter().zip(values) {
            let on = *x > half;
            match var.meta {
                VarMeta::M { u, v } => a.m[u][v] = on,
                VarMeta::Ms { u, v } => a.ms[u][v] = on,
                VarMeta::Md { u, v } => a.md[u][v] = on,
                VarMeta::I { f, v } => a.inst[f][v] = on,
                VarMeta::E { p, x, y, edge } => {
                    if on {
                        a.e[p].insert((x, y, edge));
                    }
                }
                VarMeta::Used(v) => a.used[v] = on,
                VarMeta::Remdr(e) => a.remdr[e] = *x,
                VarMeta::Lat(p) => a.lat[p] = *x,
                _ => {}
            }
        }
        a
    }
}

/// Returns the auxiliary `z = x * y` with `z <= x`, `z <= y`, `z >= x + y - 1`.
/// Asking for the same pair again (in either order) returns the same `z`.
pub fn linearize_product(inst: &mut PlacementInstance, x: VarId, y: VarId) -> Result<VarId, BuildError> {
    let name = format!("prod_{}_{}", inst.vars[x.min(y)].name, inst.vars[x.max(y)].name);
    product(inst, x, y, name, VarMeta::Product { x: x.min(y), y: x.max(y) })
}

fn product(inst: &mut PlacementInstance, x: VarId, y: VarId, name: String, meta: VarMeta) -> Result<VarId, BuildError> {
    for v in [x, y] {
        if inst.vars[v].kind != VarKind::Binary {
            return Err(BuildError::NotBinary(inst.vars[v].name.clone()));
        }
    }
    let key = (x.min(y), x.max(y));
    if let Some(&z) = inst.products.get(&key) {
        return Ok(z);
    }
    let z = inst.binary(name, meta)?;
    inst.products.insert(key, z);
    let one = Rational::one;
    let label = inst.vars[z].name.clone();
    inst.row(Family::Lin, label.clone(), vec![(z, one()), (x, -one())], Relation::Le, Rational::zero());
    inst.row(Family::Lin, label.clone(), vec![(z, one()), (y, -one())], Relation::Le, Rational::zero());
    inst.row(Family::Lin, label, vec![(z, one()), (x, -one()), (y, -one())], Relation::Ge, -one());
    Ok(z)
}

pub fn build_instance(ctx: Arc<ProblemContext>) -> Result<PlacementInstance, BuildError> {
    build_instance_with(ctx, BuildOptions::default())
}

pub fn build_instance_with(ctx: Arc<ProblemContext>, opts: BuildOptions) -> Result<PlacementInstance, BuildError> {
    let mut inst = PlacementInstance {
        ctx: ctx.clone(),
        vars: Vec::new(),
        rows: Vec::new(),
        var_index: HashMap::new(),
        objectives: [Vec::new(), Vec::new(), Vec::new()],
        products: HashMap::new(),
        meta_index: HashMap::new(),
    };
    let net = &ctx.net;
    let graph = &ctx.graph;
    let nv = net.node_count();
    let int = |n: usize| Rational::from_integer(n as i128);
    let one = Rational::one;
    let zero = Rational::zero;
    let nid = |v: usize| net.node_id(v).to_string();
    let ulab = |u: usize| frag(&ctx.node_label(u));
    let elab = |e: usize| {
        let se = &net.edges()[e];
        format!("{}_{}", nid(se.src), nid(se.dst))
    };

    // Placement variables.
    let mut m = vec![vec![0; nv]; graph.nodes.len()];
    let mut ms = vec![vec![0; nv]; graph.nodes.len()];
    let mut md = vec![vec![0; nv]; graph.nodes.len()];
    for u in 0..graph.nodes.len() {
        for v in 0..nv {
            m[u][v] = inst.binary(format!("m_{}_{}", ulab(u), nid(v)), VarMeta::M { u, v })?;
        }
    }
    for &u in &ctx.uses {
        for v in 0..nv {
            ms[u][v] = inst.binary(format!("ms_{}_{}", ulab(u), nid(v)), VarMeta::Ms { u, v })?;
            md[u][v] = inst.binary(format!("md_{}_{}", ulab(u), nid(v)), VarMeta::Md { u, v })?;
        }
    }
    let funcs = ctx.catalog.functions();
    let mut iv = vec![vec![0; nv]; funcs.len()];
    for (f, func) in funcs.iter().enumerate() {
        for v in 0..nv {
            iv[f][v] = inst.binary(format!("i_{}_{}", func.id, nid(v)), VarMeta::I { f, v })?;
        }
    }
    let used: Vec<VarId> =
        (0..nv).map(|v| inst.binary(format!("used_{}", nid(v)), VarMeta::Used(v))).collect::<Result<_, _>>()?;

    // (a), (b)
    for u in 0..graph.nodes.len() {
        let terms = (0..nv).map(|v| (m[u][v], one())).collect();
        inst.row(Family::A, ctx.node_label(u), terms, Relation::Eq, one());
    }
    for &a in &ctx.endpoints {
        let loc = ctx.node_location[a].unwrap();
        inst.row(
            Family::B,
            format!("{},{}", ctx.node_label(a), nid(loc)),
            vec![(m[a][loc], one())],
            Relation::Eq,
            one(),
        );
    }
    // (c), (h)
    let big_m = int(ctx.uses.len() + 1);
    for (f, func) in funcs.iter().enumerate() {
        let users = &ctx.uses_of_function[f];
        for v in 0..nv {
            let label = format!("{},{}", func.id, nid(v));
            let mut terms: Vec<(VarId, Rational)> = users.iter().map(|&u| (m[u][v], one())).collect();
            let mut upper = terms.clone();
            upper.push((iv[f][v], -big_m));
            inst.row(Family::C, label.clone(), upper, Relation::Le, zero());
            terms.iter_mut().for_each(|t| t.1 = -one());
            let mut lower = vec![(iv[f][v], one())];
            lower.extend(terms.iter().copied());
            inst.row(Family::C, label.clone(), lower, Relation::Le, zero());
            if !users.is_empty() {
                let terms = users.iter().map(|&u| (m[u][v], one())).collect();
                inst.row(Family::H, label, terms, Relation::Le, int(func.max_requests as usize));
            }
        }
    }
    // (d), (e)
    for &u in &ctx.uses {
        let roles = ctx.allowed_roles(u);
        for v in 0..nv {
            let label = format!("{},{}", ctx.node_label(u), nid(v));
            inst.row(Family::D, label.clone(), vec![(ms[u][v], one()), (md[u][v], one())], Relation::Eq, one());
            if roles.len() == 1 {
                let dc = roles[0] == super::Role::Dc;
                let (sw_val, dc_val) = if dc { (zero(), one()) } else { (one(), zero()) };
                inst.row(Family::E, label.clone(), vec![(ms[u][v], one())], Relation::Eq, sw_val);
                inst.row(Family::E, label, vec![(md[u][v], one())], Relation::Eq, dc_val);
            }
        }
    }
    // (f)
    for v in 0..nv {
        let (mut dc, mut sw) = (Vec::new(), Vec::new());
        for &u in &ctx.uses {
            let f = &funcs[ctx.node_function[u].unwrap()];
            let name = format!("pmd_{}_{}", ulab(u), nid(v));
            let z = product(&mut inst, m[u][v], md[u][v], name, VarMeta::ProdMd { u, v })?;
            dc.push((z, f.dc_demand));
            let name = format!("pms_{}_{}", ulab(u), nid(v));
            let z = product(&mut inst, m[u][v], ms[u][v], name, VarMeta::ProdMs { u, v })?;
            sw.push((z, f.switch_demand));
        }
        let node = &net.nodes()[v];
        inst.row(Family::F, format!("{},dc", nid(v)), dc, Relation::Le, node.dc_capacity);
        inst.row(Family::F, format!("{},switch", nid(v)), sw, Relation::Le, node.switch_capacity);
    }
    // (g)
    for (f, func) in funcs.iter().enumerate() {
        let terms = (0..nv).map(|v| (iv[f][v], one())).collect();
        inst.row(Family::G, func.id.clone(), terms, Relation::Le, int(func.max_instances as usize));
    }
    // (p)
    let big_m2 = int(funcs.len() + 1);
    for v in 0..nv {
        let mut terms: Vec<(VarId, Rational)> = (0..funcs.len()).map(|f| (iv[f][v], one())).collect();
        terms.push((used[v], -big_m2));
        inst.row(Family::P, nid(v), terms, Relation::Le, zero());
        let mut terms = vec![(used[v], one())];
        terms.extend((0..funcs.len()).map(|f| (iv[f][v], -one())));
        inst.row(Family::P, nid(v), terms, Relation::Le, zero());
    }

    // Path variables, one layer (x, y) at a time.
    let total_latency: Rational = net.edges().iter().map(|e| e.latency).sum();
    let mut edge_load: Vec<Vec<(VarId, Rational)>> = vec![Vec::new(); net.edges().len()];
    let mut edge_lat: Vec<Vec<(VarId, Rational)>> = vec![Vec::new(); graph.edges.len()];
    for (p, gedge) in graph.edges.iter().enumerate() {
        let (u1, u2) = (gedge.from, gedge.to);
        let plab = format!("{}_{}", ulab(u1), ulab(u2));
        let pair_label = format!("{},{}", ctx.node_label(u1), ctx.node_label(u2));
        let mut start_all = Vec::new();
        let mut end_all = Vec::new();
        for x in 0..nv {
            for y in 0..nv {
                if opts.prune && !ctx.layer_possible(p, x, y) {
                    continue;
                }
                let layer = format!("{},{},{}", nid(x), nid(y), pair_label);
                let mm_name = format!("mm_{}_{}_{}", nid(x), nid(y), plab);
                let mm = product(&mut inst, m[u1][x], m[u2][y], mm_name, VarMeta::Mm { p, x, y })?;
                let mut evars: Vec<(usize, VarId)> = Vec::new();
                for (e, se) in net.edges().iter().enumerate() {
                    if opts.prune {
                        let keep = if x == y {
                            se.is_self_loop() && se.src == x
                        } else {
                            !se.is_self_loop() && se.dst != x && se.src != y
                        };
                        if !keep {
                            continue;
                        }
                    }
                    let name = format!("e_{}_{}_{}_{}", elab(e), nid(x), nid(y), plab);
                    let ev = inst.binary(name, VarMeta::E { p, x, y, edge: e })?;
                    evars.push((e, ev));
                    // (i)
                    inst.row(
                        Family::I,
                        format!("{},{}", elab(e), layer),
                        vec![(ev, one()), (mm, -one())],
                        Relation::Le,
                        zero(),
                    );
                    edge_load[e].push((ev, gedge.rate));
                    edge_lat[p].push((ev, se.latency));
                }
                let src_of = |e: usize| net.edges()[e].src;
                let dst_of = |e: usize| net.edges()[e].dst;
                // (j)
                let starts: Vec<(VarId, Rational)> =
                    evars.iter().filter(|&&(e, _)| src_of(e) == x).map(|&(_, v)| (v, one())).collect();
                start_all.extend(starts.iter().copied());
                let mut per_layer = starts;
                per_layer.push((mm, -one()));
                inst.row(Family::J, layer.clone(), per_layer, Relation::Le, zero());
                // (k)
                let ends: Vec<(VarId, Rational)> =
                    evars.iter().filter(|&&(e, _)| dst_of(e) == y).map(|&(_, v)| (v, one())).collect();
                end_all.extend(ends.iter().copied());
                let mut per_layer = ends;
                per_layer.push((mm, -one()));
                inst.row(Family::K, layer.clone(), per_layer, Relation::Le, zero());
                if x != y {
                    let into_x: Vec<(VarId, Rational)> = evars
                        .iter()
                        .filter(|&&(e, _)| dst_of(e) == x && src_of(e) != x)
                        .map(|&(_, v)| (v, one()))
                        .collect();
                    if !into_x.is_empty() {
                        inst.row(Family::J, layer.clone(), into_x, Relation::Eq, zero());
                    }
                    let out_y: Vec<(VarId, Rational)> = evars
                        .iter()
                        .filter(|&&(e, _)| src_of(e) == y && dst_of(e) != y)
                        .map(|&(_, v)| (v, one()))
                        .collect();
                    if !out_y.is_empty() {
                        inst.row(Family::K, layer.clone(), out_y, Relation::Eq, zero());
                    }
                }
                // (l)
                for w in (0..nv).filter(|&w| w != x && w != y) {
                    let mut terms = Vec::new();
                    for &(e, v) in &evars {
                        let se = &net.edges()[e];
                        if se.is_self_loop() {
                            continue;
                        }
                        if se.dst == w {
                            terms.push((v, one()));
                        } else if se.src == w {
                            terms.push((v, -one()));
                        }
                    }
                    if !terms.is_empty() {
                        inst.row(Family::L, format!("{layer},{}", nid(w)), terms, Relation::Eq, zero());
                    }
                }
                // (m)
                let lookup: HashMap<usize, VarId> = evars.iter().copied().collect();
                for &(e, v) in &evars {
                    let se = &net.edges()[e];
                    if se.is_self_loop() != (x == y) {
                        inst.row(Family::M, format!("{},{}", elab(e), layer), vec![(v, one())], Relation::Eq, zero());
                    }
                    if !se.is_self_loop() && se.src < se.dst {
                        if let Some(&back) = net.edge_between(se.dst, se.src).and_then(|b| lookup.get(&b)) {
                            inst.row(
                                Family::M,
                                format!("{},{}", elab(e), layer),
                                vec![(v, one()), (back, one())],
                                Relation::Le,
                                one(),
                            );
                        }
                    }
                }
            }
        }
        inst.row(Family::J, pair_label.clone(), start_all, Relation::Eq, one());
        inst.row(Family::K, pair_label, end_all, Relation::Eq, one());
    }

    // (n), (q)
    let mut remdr = Vec::with_capacity(net.edges().len());
    for (e, se) in net.edges().iter().enumerate() {
        let r = inst.add_var(format!("remdr_{}", elab(e)), VarKind::Continuous, zero(), se.rate, VarMeta::Remdr(e))?;
        remdr.push(r);
        inst.row(Family::N, elab(e), edge_load[e].clone(), Relation::Le, se.rate);
        let mut terms = vec![(r, one())];
        terms.extend(edge_load[e].iter().copied());
        inst.row(Family::Q, elab(e), terms, Relation::Eq, se.rate);
    }
    // (r)
    let mut lat = Vec::with_capacity(graph.edges.len());
    for p in 0..graph.edges.len() {
        let (u1, u2) = (graph.edges[p].from, graph.edges[p].to);
        let name = format!("lat_{}_{}", ulab(u1), ulab(u2));
        let l = inst.add_var(name, VarKind::Continuous, zero(), total_latency, VarMeta::Lat(p))?;
        lat.push(l);
        let mut terms = vec![(l, one())];
        terms.extend(edge_lat[p].iter().map(|&(v, c)| (v, -c)));
        inst.row(Family::R, format!("{},{}", ctx.node_label(u1), ctx.node_label(u2)), terms, Relation::Eq, zero());
    }
    // (o)
    for g in &ctx.bound_groups {
        let pair = &graph.pairs[g.pair];
        let terms = g.edges.iter().flat_map(|&p| edge_lat[p].iter().copied()).collect();
        let label = format!("{},{}", ctx.node_label(pair.src), ctx.node_label(pair.dst));
        inst.row(Family::O, label, terms, Relation::Le, g.bound);
    }

    inst.objectives[Objective::Remdr as usize] =
        net.edges().iter().enumerate().filter(|(_, e)| !e.is_self_loop()).map(|(e, _)| (remdr[e], one())).collect();
    inst.objectives[Objective::UsedNodes as usize] = used.iter().map(|&v| (v, one())).collect();
    inst.objectives[Objective::Latency as usize] = lat
        .iter()
        .enumerate()
        .filter(|&(p, _)| ctx.lat_coeff[p] > 0)
        .map(|(p, &l)| (l, Rational::from_integer(ctx.lat_coeff[p] as i128)))
        .collect();
    Ok(inst)
}
