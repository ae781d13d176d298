use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::problem::Problem;
use crate::Rational;

fn q(n: i128) -> Rational {
    Rational::from_integer(n)
}

/// Line network n1 - n2 - n3 with self-loops, one use between two endpoints.
fn line_problem(p_d: &str, p_s: &str, rate: &str) -> Problem {
    let net = format!(
        r#"{{"nodes": [{{"id":"n1","c_d":4,"c_s":4}}, {{"id":"n2","c_d":4,"c_s":4}}, {{"id":"n3","c_d":4,"c_s":4}}],
        "edges": [
          {{"src":"n1","dst":"n2","d":{rate},"l":1}}, {{"src":"n2","dst":"n1","d":{rate},"l":1}},
          {{"src":"n2","dst":"n3","d":{rate},"l":2}}, {{"src":"n3","dst":"n2","d":{rate},"l":2}},
          {{"src":"n1","dst":"n1","d":100,"l":0}}, {{"src":"n2","dst":"n2","d":100,"l":0}},
          {{"src":"n3","dst":"n3","d":100,"l":0}}
        ]}}"#
    );
    let catalog = format!(r#"{{"functions": [{{"id":"fw","p_d":{p_d},"p_s":{p_s},"n_inst":2,"n_req":2}}]}}"#);
    let requests = r#"[{"id":"r","uses":[{"id":"u1","function":"fw","ratios":[1]}],
        "chain":"a1 . u1 . a2","endpoints":[{"id":"a1","loc":"n1"},{"id":"a2","loc":"n3"}],
        "pairs":[["a1","a2"]],"d_in":3,"l_req":[{"src":"a1","dst":"a2","bound":10}]}]"#;
    Problem::from_json(&net, &catalog, requests).unwrap()
}

fn ctx_of(p: &Problem) -> Arc<ProblemContext> {
    p.heuristic_context().unwrap()
}

fn node(ctx: &ProblemContext, id: &str) -> usize {
    ctx.net.node_by_id(id).unwrap()
}

fn edge(ctx: &ProblemContext, a: &str, b: &str) -> usize {
    ctx.net.edge_between(node(ctx, a), node(ctx, b)).unwrap()
}

/// u1 on n2 as a data-center function, paths n1->n2 and n2->n3.
fn feasible(ctx: &ProblemContext) -> (Vec<usize>, Vec<Role>, Vec<Vec<usize>>) {
    let g = &ctx.graph;
    let mut mapping = vec![0; g.nodes.len()];
    for u in 0..g.nodes.len() {
        mapping[u] = match g.nodes[u].name.as_str() {
            "a1" => node(ctx, "n1"),
            "u1" => node(ctx, "n2"),
            _ => node(ctx, "n3"),
        };
    }
    let routes = (0..g.edges.len())
        .map(|p| {
            if g.nodes[g.edges[p].from].name == "a1" {
                vec![edge(ctx, "n1", "n2")]
            } else {
                vec![edge(ctx, "n2", "n3")]
            }
        })
        .collect();
    (mapping, vec![Role::Dc; g.nodes.len()], routes)
}

#[test]
fn unique_mapping_row_lists_every_node() {
    let p = line_problem("1", "1", "10");
    let inst = build_instance(ctx_of(&p)).unwrap();
    let u1 = inst.var_by_name("m_r.u1_n1").unwrap();
    let row = inst.rows.iter().find(|r| r.tag == Family::A && r.label == "r/u1").unwrap();
    let vars: BTreeSet<&str> = row.terms.iter().map(|&(v, _)| inst.vars[v].name.as_str()).collect();
    assert_eq!(vars, BTreeSet::from(["m_r.u1_n1", "m_r.u1_n2", "m_r.u1_n3"]));
    assert!(row.terms.iter().any(|&(v, _)| v == u1));
    assert_eq!((row.relation, row.rhs), (Relation::Eq, q(1)));
}

#[test]
fn dc_only_function_forces_roles() {
    let p = line_problem("1", "0", "10");
    let inst = build_instance(ctx_of(&p)).unwrap();
    for v in ["n1", "n2", "n3"] {
        let ms = inst.var_by_name(&format!("ms_r.u1_{v}")).unwrap();
        let md = inst.var_by_name(&format!("md_r.u1_{v}")).unwrap();
        let forced =
            |var, val| inst.rows.iter().any(|r| r.tag == Family::E && r.terms == vec![(var, q(1))] && r.rhs == q(val));
        assert!(forced(ms, 0) && forced(md, 1), "{v}");
    }
}

#[test]
fn unpruned_path_family_has_full_size() {
    let p = line_problem("1", "1", "10");
    let ctx = ctx_of(&p);
    let inst = build_instance_with(ctx.clone(), BuildOptions { prune: false }).unwrap();
    let n = ctx.net.node_count();
    let expected = ctx.net.edges().len() * n * n * ctx.graph.edges.len();
    assert_eq!(inst.count_vars(|m| matches!(m, VarMeta::E { .. })), expected);
    let pruned = build_instance(ctx).unwrap();
    assert!(pruned.count_vars(|m| matches!(m, VarMeta::E { .. })) < expected);
}

#[test]
fn product_truth_table() {
    let p = line_problem("1", "1", "10");
    let mut inst = build_instance(ctx_of(&p)).unwrap();
    let x = inst.var_by_name("used_n1").unwrap();
    let y = inst.var_by_name("used_n2").unwrap();
    let before = inst.rows.len();
    let z = linearize_product(&mut inst, x, y).unwrap();
    assert_eq!(linearize_product(&mut inst, y, x).unwrap(), z);
    assert_eq!(inst.rows.len(), before + 3);
    let rows = &inst.rows[before..];
    for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        for zv in 0..2 {
            let mut vals = vec![q(0); inst.vars.len()];
            vals[x] = q(a);
            vals[y] = q(b);
            vals[z] = q(zv);
            assert_eq!(rows.iter().all(|r| r.holds(&vals)), zv == a * b, "{a} {b} {zv}");
        }
    }
    let cont = inst.var_by_name("remdr_n1_n2").unwrap();
    assert!(matches!(linearize_product(&mut inst, x, cont), Err(BuildError::NotBinary(_))));
}

#[test]
fn hand_built_placement_is_clean() {
    let p = line_problem("1", "1", "10");
    let ctx = ctx_of(&p);
    let (m, r, routes) = feasible(&ctx);
    let sol = PlacementSolution::from_parts(&ctx, &m, &r, &routes);
    let report = check_solution(&ctx, &sol);
    assert!(report.is_clean(), "{}", report.to_json());
    assert_eq!(sol.objective.used_nodes, 1);
    assert_eq!(sol.objective.latency, q(3));
    // Four non-self-loop edges at rate 10, two of them carrying 3.
    assert_eq!(sol.objective.remdr, q(34));
    let rem = sol.remaining_rate.iter().find(|e| e.src == "n1" && e.dst == "n2").unwrap();
    assert_eq!(rem.remaining, q(7));

    let inst = build_instance(ctx.clone()).unwrap();
    let vals = inst.values_of(&Assignment::from_parts(&ctx, &m, &r, &routes)).unwrap();
    assert!(inst.is_feasible(&vals), "{:?}", inst.violated_rows(&vals));
}

#[test]
fn deleting_a_middle_edge_breaks_preservation() {
    let p = line_problem("1", "1", "10");
    let ctx = ctx_of(&p);
    let g = &ctx.graph;
    // u1 co-located with a1 on n1, so a1->u1 uses the n1 self-loop and u1->a2 walks n1->n2->n3.
    let mapping: Vec<usize> = g.nodes.iter().map(|n| node(&ctx, if n.name == "a2" { "n3" } else { "n1" })).collect();
    let mut routes: Vec<Vec<usize>> = (0..g.edges.len())
        .map(|p| {
            if g.nodes[g.edges[p].from].name == "a1" {
                vec![edge(&ctx, "n1", "n1")]
            } else {
                vec![edge(&ctx, "n1", "n2"), edge(&ctx, "n2", "n3")]
            }
        })
        .collect();
    let roles = vec![Role::Dc; g.nodes.len()];
    assert!(check_solution(&ctx, &PlacementSolution::from_parts(&ctx, &mapping, &roles, &routes)).is_clean());
    let long = routes.iter().position(|r| r.len() == 2).unwrap();
    routes[long].remove(1);
    let report = check_solution(&ctx, &PlacementSolution::from_parts(&ctx, &mapping, &roles, &routes));
    let broken: Vec<&Violation> = report.violations.iter().filter(|v| v.tag == "l").collect();
    assert_eq!(broken.len(), 1);
    assert_eq!(broken[0].indices.last().unwrap(), "n2");
}

#[test]
fn objective_mismatch_is_reported() {
    let p = line_problem("1", "1", "10");
    let ctx = ctx_of(&p);
    let (m, r, routes) = feasible(&ctx);
    let mut sol = PlacementSolution::from_parts(&ctx, &m, &r, &routes);
    sol.objective.latency = q(2);
    assert_eq!(check_solution(&ctx, &sol).tags(), BTreeSet::from(["objective".to_string()]));
    sol.mapping.remove("r/u1");
    assert!(check_solution(&ctx, &sol).tags().contains("structure"));
}

#[test]
fn lp_round_trip_and_objective_line() {
    let p = line_problem("\"3/2\"", "1", "10");
    let inst = build_instance(ctx_of(&p)).unwrap();
    for obj in Objective::ALL {
        let text = export_lp(&inst, obj);
        assert_eq!(parse_lp(&text).unwrap(), LpModel::of(&inst, obj), "{obj}");
    }
    let text = export_lp(&inst, Objective::UsedNodes);
    let model = parse_lp(&text).unwrap();
    assert!(!model.maximize);
    assert!(model.objective.keys().all(|k| k.starts_with("used_")));
    assert_eq!(model.objective.len(), 3);
    assert!(parse_lp(&export_lp(&inst, Objective::Remdr)).unwrap().maximize);
}

fn solution_text(inst: &PlacementInstance, vals: &[Rational]) -> String {
    inst.vars.iter().zip(vals).map(|(v, x)| format!("{} {}\n", v.name, crate::rational::to_f64(x))).collect()
}

#[test]
fn import_reads_back_a_placement() {
    let p = line_problem("1", "1", "10");
    let ctx = ctx_of(&p);
    let inst = build_instance(ctx.clone()).unwrap();
    let (m, r, routes) = feasible(&ctx);
    let vals = inst.values_of(&Assignment::from_parts(&ctx, &m, &r, &routes)).unwrap();
    let mut text = String::from("# Primal solution values\nObjective 3\n");
    text.push_str(&solution_text(&inst, &vals).replace(" 1\n", " 0.9999999\n"));
    let (sol, report) = import_solution_str(&inst, &text).unwrap();
    assert!(report.is_clean(), "{}", report.to_json());
    assert_eq!(sol, PlacementSolution::from_parts(&ctx, &m, &r, &routes));

    let zeros = solution_text(&inst, &vec![q(0); inst.vars.len()]);
    let (_, report) = import_solution_str(&inst, &zeros).unwrap();
    assert!(report.tags().contains("a"));
    assert!(report.tags().contains("q"));

    let extra = format!("{text}bogus_var 1\n");
    assert!(matches!(import_solution_str(&inst, &extra), Err(LpError::UnknownVariable(_))));
    let missing: String = text.lines().filter(|l| !l.starts_with("m_r.u1_n2")).map(|l| format!("{l}\n")).collect();
    assert!(matches!(import_solution_str(&inst, &missing), Err(LpError::MissingVariable(_))));
    let fractional = text.replacen(" 0.9999999\n", " 0.5\n", 1);
    assert!(matches!(import_solution_str(&inst, &fractional), Err(LpError::NonIntegral { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Flipping bits of a feasible placement keeps the linear program and
    /// the quadratic checker in agreement.
    #[test]
    fn linear_rows_agree_with_checker(flips in proptest::collection::vec((0usize..4, 0usize..64, 0usize..8), 0..4)) {
        let p = line_problem("1", "1", "4");
        let ctx = ctx_of(&p);
        let inst = build_instance_with(ctx.clone(), BuildOptions { prune: false }).unwrap();
        let (m, r, routes) = feasible(&ctx);
        let mut a = Assignment::from_parts(&ctx, &m, &r, &routes);
        let nv = ctx.net.node_count();
        for (kind, i, j) in flips {
            let u = i % ctx.graph.nodes.len();
            let v = j % nv;
            match kind {
                0 => a.m[u][v] = !a.m[u][v],
                1 => if !ctx.is_endpoint(u) { a.md[u][v] = !a.md[u][v]; a.ms[u][v] = !a.ms[u][v] },
                2 => { let f = 0; a.inst[f][v] = !a.inst[f][v]; a.used[v] = !a.used[v] }
                _ => {
                    let pe = i % ctx.graph.edges.len();
                    let e = j % ctx.net.edges().len();
                    let (x, y) = (m[ctx.graph.edges[pe].from], m[ctx.graph.edges[pe].to]);
                    let t = (x, y, e);
                    if !a.e[pe].remove(&t) { a.e[pe].insert(t); }
                }
            }
        }
        // Keep the continuous variables at their defined values.
        let fixed = Assignment::from_parts(&ctx, &m, &r, &routes);
        let _ = fixed;
        for (e, se) in ctx.net.edges().iter().enumerate() {
            let load: Rational = a.e.iter().enumerate().filter(|(_, s)| s.iter().any(|t| t.2 == e)).map(|(p, _)| ctx.dreq(p)).sum();
            a.remdr[e] = se.rate - load;
        }
        for pe in 0..ctx.graph.edges.len() {
            a.lat[pe] = a.e[pe].iter().map(|&(_, _, e)| ctx.net.edges()[e].latency).sum();
        }
        let vals = inst.values_of(&a).unwrap();
        let clean = check_assignment(&ctx, &a).is_clean();
        let bounded = vals.iter().zip(&inst.vars).all(|(x, v)| *x >= v.lower && *x <= v.upper);
        prop_assert_eq!(inst.rows.iter().all(|r| r.holds(&vals)) && bounded, clean);
    }
}
