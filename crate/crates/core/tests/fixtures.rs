mod common;

use chainforge::graph_build::combination_count;
use chainforge::milp::{check_solution, Objective};
use chainforge::solver::{solve_decomposed, SolveConfig, Status};
use common::*;

#[test]
fn abilene_shape() {
    let p = fixture("abilene");
    assert_eq!(p.net.node_count(), 12);
    assert_eq!(p.net.edges().len(), 42);
    let combos: u128 = p.asts.iter().map(|a| combination_count(a) as u128).product();
    assert_eq!(combos, 144);
    let g = p.heuristic_graph().unwrap();
    assert_eq!(g.use_count(), 10);
    assert_eq!(g.edges.len(), 13);
}

#[test]
fn tiny_optima() {
    let ctx = fixture("tiny").heuristic_context().unwrap();
    for (obj, want) in [(Objective::Remdr, 60), (Objective::UsedNodes, 1), (Objective::Latency, 0)] {
        let r = solve_decomposed(&ctx, &SolveConfig::new(obj)).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert_eq!(r.value(), Some(q(want)), "{obj}");
        assert!(check_solution(&ctx, r.solution.as_ref().unwrap()).is_clean());
    }
}

#[test]
fn infeasible_fixture_has_no_solution() {
    let ctx = fixture("infeasible").heuristic_context().unwrap();
    for obj in Objective::ALL {
        let r = solve_decomposed(&ctx, &SolveConfig::new(obj)).unwrap();
        assert_eq!(r.status, Status::Infeasible);
        assert!(r.solution.is_none());
    }
    assert!(feasible_values(&ctx).is_empty());
}

#[test]
fn solver_agrees_with_enumeration_on_small_fixtures() {
    for name in ["tiny", "ample", "constrained"] {
        let ctx = fixture(name).heuristic_context().unwrap();
        let all = feasible_values(&ctx);
        for obj in Objective::ALL {
            let r = solve_decomposed(&ctx, &SolveConfig::new(obj)).unwrap();
            assert_eq!(r.value(), best(&all, obj), "{name} {obj}");
        }
    }
}
