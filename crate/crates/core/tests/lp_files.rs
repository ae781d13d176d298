//! The LP files under fixtures/tiny/highs were written by the exporter and
//! solved with HiGHS; the .sol files are its raw output.

mod common;

use std::fs;

use chainforge::milp::{build_instance, export_lp, import_solution, parse_lp, Objective};
use common::*;

fn tiny() -> chainforge::milp::PlacementInstance {
    build_instance(fixture("tiny").heuristic_context().unwrap()).unwrap()
}

#[test]
fn export_is_stable() {
    let inst = tiny();
    for obj in Objective::ALL {
        let frozen = fs::read_to_string(fixture_dir("tiny").join(format!("highs/tiny_{obj}.lp"))).unwrap();
        assert_eq!(export_lp(&inst, obj), frozen, "{obj}");
    }
}

#[test]
fn export_parses_back() {
    let inst = tiny();
    for obj in Objective::ALL {
        let text = export_lp(&inst, obj);
        let model = parse_lp(&text).unwrap();
        assert_eq!(model.to_lp_string(), text);
    }
}

#[test]
fn highs_solutions_import_clean() {
    let inst = tiny();
    for (obj, want) in [(Objective::Remdr, 60.0), (Objective::UsedNodes, 1.0), (Objective::Latency, 0.0)] {
        let path = fixture_dir("tiny").join(format!("highs/tiny_{obj}.sol"));
        let (sol, report) = import_solution(&inst, path).unwrap();
        assert!(report.is_clean(), "{obj}: {}", report.to_json());
        let got = sol.objective.metric(obj);
        let got = *got.numer() as f64 / *got.denom() as f64;
        assert!((got - want).abs() <= 1e-6, "{obj}: {got}");
    }
}
