use proptest::prelude::*;

use super::*;
use crate::problem::Problem;
use crate::testutil::{feasible_values, random_problem};

fn vals(remdr: i128, used: u32, latency: i128) -> ObjectiveValues {
    ObjectiveValues { remdr: Rational::from_integer(remdr), used_nodes: used, latency: Rational::from_integer(latency) }
}

fn exact() -> SweepOptions {
    SweepOptions { grid: Grid::Exact, time_limit: Duration::from_secs(60), ..SweepOptions::default() }
}

#[test]
fn dominance_examples() {
    assert!(!dominates(&vals(5, 2, 10), &vals(5, 2, 10)));
    assert!(dominates(&vals(6, 2, 10), &vals(5, 2, 10)));
    assert!(!dominates(&vals(6, 3, 9), &vals(5, 2, 10)));
    assert!(!dominates(&vals(5, 2, 10), &vals(6, 3, 9)));
}

#[test]
fn filter_drops_dominated_and_repeated_points() {
    let v = [vals(5, 2, 10), vals(6, 2, 10), vals(6, 2, 10), vals(7, 3, 12)];
    assert_eq!(non_dominated(&v), vec![1, 3]);
}

#[test]
fn uniform_floors_span_the_range() {
    let r = Range { best: Rational::from_integer(10), worst: Rational::from_integer(3) };
    let f = uniform_floors(&r, 8);
    assert_eq!(f.len(), 8);
    assert_eq!((f[0], f[7]), (r.worst, r.best));
    assert_eq!(uniform_floors(&r, 1), vec![r.worst]);
}

const NET: &str = r#"{"nodes": [{"id":"n1","c_d":4,"c_s":4}, {"id":"n2","c_d":4,"c_s":4}, {"id":"n3","c_d":4,"c_s":4}],
    "edges": [
      {"src":"n1","dst":"n2","d":10,"l":1}, {"src":"n2","dst":"n1","d":10,"l":1},
      {"src":"n2","dst":"n3","d":10,"l":2}, {"src":"n3","dst":"n2","d":10,"l":2},
      {"src":"n1","dst":"n1","d":100,"l":0}, {"src":"n2","dst":"n2","d":100,"l":0},
      {"src":"n3","dst":"n3","d":100,"l":0}
    ]}"#;
const CATALOG: &str = r#"{"functions": [{"id":"fw","p_d":1,"p_s":1,"n_inst":2,"n_req":2}]}"#;
const REQ: &str = r#"[{"id":"r","uses":[{"id":"u1","function":"fw","ratios":[1]}],
    "chain":"a1 . u1 . a2","endpoints":[{"id":"a1","loc":"n1"},{"id":"a2","loc":"n3"}],
    "pairs":[["a1","a2"]],"d_in":3,"l_req":[{"src":"a1","dst":"a2","bound":10}]}]"#;

#[test]
fn line_fixture_has_a_single_optimal_point() {
    let ctx = Problem::from_json(NET, CATALOG, REQ).unwrap().heuristic_context().unwrap();
    let ranges = estimate_ranges(&ctx, &SweepOptions::default()).unwrap();
    for m in Objective::ALL {
        assert_eq!(ranges.get(m).best, ranges.get(m).worst, "{m}");
    }
    for grid in [Grid::Exact, Grid::Uniform(8)] {
        let front = sweep(&ctx, &ranges, &SweepOptions { grid, ..exact() }).unwrap();
        assert_eq!(front.triples(), vec![(Rational::from_integer(34), 1, Rational::from_integer(3))]);
        assert_eq!(front.to_csv(), "remdr,used_nodes,latency,solution_id\n34,1,3,p0\n");
    }
}

#[test]
fn infeasible_input_has_no_ranges() {
    let ctx = Problem::from_json(&NET.replace("\"c_d\":4,\"c_s\":4", "\"c_d\":0,\"c_s\":0"), CATALOG, REQ)
        .unwrap()
        .heuristic_context()
        .unwrap();
    assert!(matches!(estimate_ranges(&ctx, &SweepOptions::default()), Err(ParetoError::Infeasible(_))));
}

#[test]
fn front_round_trips_through_json() {
    let ctx = Problem::from_json(NET, CATALOG, REQ).unwrap().heuristic_context().unwrap();
    let ranges = estimate_ranges(&ctx, &exact()).unwrap();
    let front = sweep(&ctx, &ranges, &exact()).unwrap();
    assert_eq!(ParetoFront::from_json(&front.to_json()).unwrap(), front);
}

fn arb_values() -> impl Strategy<Value = ObjectiveValues> {
    (0i128..4, 0u32..4, 0i128..4).prop_map(|(r, u, l)| vals(r, u, l))
}

proptest! {
    #[test]
    fn dominance_is_a_strict_partial_order(a in arb_values(), b in arb_values(), c in arb_values()) {
        prop_assert!(!dominates(&a, &a));
        prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
        if dominates(&a, &b) && dominates(&b, &c) {
            prop_assert!(dominates(&a, &c));
        }
    }

    #[test]
    fn filtered_set_is_mutually_non_dominated(v in prop::collection::vec(arb_values(), 0..12)) {
        let keep = non_dominated(&v);
        for &i in &keep {
            for &j in &keep {
                prop_assert!(!dominates(&v[i], &v[j]));
            }
        }
        for (i, x) in v.iter().enumerate() {
            prop_assert!(keep.contains(&i) || v.iter().any(|y| dominates(y, x) || (y == x && keep.iter().any(|&k| &v[k] == x))));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn exact_front_matches_exhaustive_enumeration(seed in any::<u64>()) {
        let ctx = random_problem(seed).heuristic_context().unwrap();
        let all = feasible_values(&ctx);
        let Ok(ranges) = estimate_ranges(&ctx, &exact()) else {
            prop_assert!(all.is_empty());
            return Ok(());
        };
        let front = sweep(&ctx, &ranges, &exact()).unwrap();
        let mut expected: Vec<_> = non_dominated(&all).into_iter().map(|i| (all[i].remdr, all[i].used_nodes, all[i].latency)).collect();
        expected.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        prop_assert_eq!(front.triples(), expected);
        for p in &front.points {
            prop_assert!(crate::milp::check_solution(&ctx, &p.solution).is_clean());
        }
    }
}
