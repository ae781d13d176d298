use std::sync::Arc;
use std::time::Duration;

use proptest::prelude::*;

use super::*;
use crate::milp::{build_instance, Relation};
use crate::problem::Problem;
use crate::testutil::{feasible_values, random_problem};

fn q(n: i128) -> Rational {
    Rational::from_integer(n)
}

fn problem(net: &str, catalog: &str, requests: &str) -> Problem {
    Problem::from_json(net, catalog, requests).unwrap()
}

fn line_net(rate: u32, cap: u32) -> String {
    format!(
        r#"{{"nodes": [{{"id":"n1","c_d":{cap},"c_s":{cap}}}, {{"id":"n2","c_d":{cap},"c_s":{cap}}}, {{"id":"n3","c_d":{cap},"c_s":{cap}}}],
        "edges": [
          {{"src":"n1","dst":"n2","d":{rate},"l":1}}, {{"src":"n2","dst":"n1","d":{rate},"l":1}},
          {{"src":"n2","dst":"n3","d":{rate},"l":2}}, {{"src":"n3","dst":"n2","d":{rate},"l":2}},
          {{"src":"n1","dst":"n1","d":100,"l":0}}, {{"src":"n2","dst":"n2","d":100,"l":0}},
          {{"src":"n3","dst":"n3","d":100,"l":0}}
        ]}}"#
    )
}

const CATALOG: &str = r#"{"functions": [{"id":"fw","p_d":1,"p_s":1,"n_inst":2,"n_req":2}]}"#;

const ONE_USE: &str = r#"[{"id":"r","uses":[{"id":"u1","function":"fw","ratios":[1]}],
    "chain":"a1 . u1 . a2","endpoints":[{"id":"a1","loc":"n1"},{"id":"a2","loc":"n3"}],
    "pairs":[["a1","a2"]],"d_in":3,"l_req":[{"src":"a1","dst":"a2","bound":10}]}]"#;

fn config(obj: Objective) -> SolveConfig {
    let mut c = SolveConfig::new(obj);
    c.time_limit = Duration::from_secs(60);
    c
}

fn both(ctx: &Arc<ProblemContext>, cfg: &SolveConfig) -> (SolveResult, SolveResult) {
    let d = solve_with(Engine::Decomposed, ctx.clone(), cfg).unwrap();
    let m = solve_with(Engine::Monolithic, ctx.clone(), cfg).unwrap();
    (d, m)
}

/// Best metric value over every placement the exhaustive oracle finds.
fn brute(ctx: &ProblemContext, obj: Objective, bounds: &[MetricBound]) -> Option<Rational> {
    let vals = feasible_values(ctx).into_iter().filter(|v| bounds.iter().all(|b| b.holds(v))).map(|v| v.metric(obj));
    if obj.maximize() {
        vals.max()
    } else {
        vals.min()
    }
}

#[test]
fn used_optimum_is_one_node() {
    let p = problem(&line_net(10, 4), CATALOG, ONE_USE);
    let ctx = p.heuristic_context().unwrap();
    let (d, m) = both(&ctx, &config(Objective::UsedNodes));
    for r in [&d, &m] {
        assert_eq!(r.status, Status::Optimal);
        assert_eq!(r.value(), Some(q(1)));
        assert_eq!(r.bound, Some(q(1)));
    }
}

#[test]
fn remdr_loads_only_the_route() {
    let p = problem(&line_net(10, 4), CATALOG, ONE_USE);
    let ctx = p.heuristic_context().unwrap();
    let (d, m) = both(&ctx, &config(Objective::Remdr));
    // Both graph edges carry 3 over two hops in total: 40 - 6.
    assert_eq!(d.value(), Some(q(34)));
    assert_eq!(m.value(), Some(q(34)));
    let sol = d.solution.unwrap();
    let full: Vec<_> = sol.remaining_rate.iter().filter(|r| r.remaining == q(10)).collect();
    assert_eq!(full.len(), 2);
}

#[test]
fn latency_optimum_matches_the_shortest_route() {
    let p = problem(&line_net(10, 4), CATALOG, ONE_USE);
    let ctx = p.heuristic_context().unwrap();
    let (d, m) = both(&ctx, &config(Objective::Latency));
    assert_eq!(d.value(), Some(q(3)));
    assert_eq!(m.value(), Some(q(3)));
}

#[test]
fn zero_capacity_is_infeasible() {
    let p = problem(&line_net(10, 0), CATALOG, ONE_USE);
    let ctx = p.heuristic_context().unwrap();
    for obj in Objective::ALL {
        let (d, m) = both(&ctx, &config(obj));
        assert_eq!(d.status, Status::Infeasible);
        assert_eq!(m.status, Status::Infeasible);
        assert!(d.solution.is_none() && m.solution.is_none());
    }
}

#[test]
fn tight_links_force_infeasibility() {
    // Links carry 2 but the request sends 3.
    let p = problem(&line_net(2, 4), CATALOG, ONE_USE);
    let ctx = p.heuristic_context().unwrap();
    let (d, m) = both(&ctx, &config(Objective::Remdr));
    assert_eq!((d.status, m.status), (Status::Infeasible, Status::Infeasible));
}

#[test]
fn extra_bound_changes_the_optimum() {
    let p = problem(&line_net(10, 4), CATALOG, ONE_USE);
    let ctx = p.heuristic_context().unwrap();
    let cfg = config(Objective::Latency).with_bounds(vec![MetricBound::new(Objective::UsedNodes, Relation::Le, q(0))]);
    let (d, m) = both(&ctx, &cfg);
    assert_eq!((d.status, m.status), (Status::Infeasible, Status::Infeasible));
}

#[test]
fn zero_time_limit_is_rejected() {
    let p = problem(&line_net(10, 4), CATALOG, ONE_USE);
    let ctx = p.heuristic_context().unwrap();
    let mut cfg = config(Objective::Remdr);
    cfg.time_limit = Duration::ZERO;
    assert!(matches!(solve_with(Engine::Decomposed, ctx.clone(), &cfg), Err(SolveError::InvalidConfig(_))));
    assert!(matches!(solve_with(Engine::Monolithic, ctx, &cfg), Err(SolveError::InvalidConfig(_))));
}

#[test]
fn rank_orders_and_rejects_mixed_objectives() {
    let ok = problem(&line_net(10, 4), CATALOG, ONE_USE);
    let bad = problem(&line_net(10, 0), CATALOG, ONE_USE);
    let cfg = config(Objective::Remdr);
    let a = solve_decomposed(&ok.heuristic_context().unwrap(), &cfg).unwrap();
    let b = solve_decomposed(&bad.heuristic_context().unwrap(), &cfg).unwrap();
    let ranked = rank(vec![("b".into(), b), ("a".into(), a.clone())], Objective::Remdr).unwrap();
    assert_eq!(ranked.iter().map(|r| r.0.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    let lat = solve_decomposed(&ok.heuristic_context().unwrap(), &config(Objective::Latency)).unwrap();
    assert!(matches!(
        rank(vec![("a".into(), a), ("l".into(), lat)], Objective::Remdr),
        Err(SolveError::MixedObjectives(..))
    ));
}

#[test]
fn solutions_pass_the_checker() {
    let p = problem(&line_net(10, 4), CATALOG, ONE_USE);
    let ctx = p.heuristic_context().unwrap();
    for obj in Objective::ALL {
        let (d, m) = both(&ctx, &config(obj));
        for r in [d, m] {
            let sol = r.solution.unwrap();
            assert!(crate::milp::check_solution(&ctx, &sol).is_clean(), "{obj:?}");
        }
    }
}

#[test]
fn monolithic_runs_on_a_built_instance() {
    let p = problem(&line_net(10, 4), CATALOG, ONE_USE);
    let inst = build_instance(p.heuristic_context().unwrap()).unwrap();
    let r = solve(&inst, &config(Objective::UsedNodes)).unwrap();
    assert_eq!(r.value(), Some(q(1)));
    assert!(r.stats.nodes_explored > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn engines_match_exhaustive_search(seed in any::<u64>(), which in 0usize..3) {
        let p = random_problem(seed);
        let ctx = p.heuristic_context().unwrap();
        let obj = Objective::ALL[which];
        let expected = brute(&ctx, obj, &[]);
        let (d, m) = both(&ctx, &config(obj));
        prop_assert_eq!(d.value(), expected);
        prop_assert_eq!(m.value(), expected);
        let want = if expected.is_some() { Status::Optimal } else { Status::Infeasible };
        prop_assert_eq!(d.status, want);
        prop_assert_eq!(m.status, want);
    }

    #[test]
    fn extra_bounds_are_respected(seed in any::<u64>(), k in 0i128..3) {
        let p = random_problem(seed);
        let ctx = p.heuristic_context().unwrap();
        let bounds = vec![MetricBound::new(Objective::UsedNodes, Relation::Le, q(k))];
        let expected = brute(&ctx, Objective::Latency, &bounds);
        let (d, m) = both(&ctx, &config(Objective::Latency).with_bounds(bounds));
        prop_assert_eq!(d.value(), expected);
        prop_assert_eq!(m.value(), expected);
    }
}
