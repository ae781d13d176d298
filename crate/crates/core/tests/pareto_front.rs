mod common;

use std::time::Duration;

use chainforge::pareto::{estimate_ranges, sweep, Grid, SweepOptions};
use common::*;

fn opts(grid: Grid, threads: usize) -> SweepOptions {
    SweepOptions { grid, threads, time_limit: Duration::from_secs(60), ..SweepOptions::default() }
}

#[test]
fn uniform_points_are_optimal_in_their_cells() {
    for name in ["ample", "constrained"] {
        let ctx = fixture(name).heuristic_context().unwrap();
        let all = feasible_values(&ctx);
        let exact = opts(Grid::Exact, 1);
        let ranges = estimate_ranges(&ctx, &exact).unwrap();
        for g in [1, 3, 8] {
            let coarse = sweep(&ctx, &ranges, &opts(Grid::Uniform(g), 1)).unwrap();
            assert!(!coarse.points.is_empty());
            for pt in &coarse.points {
                let floor = pt.cell.remdr_floor.unwrap();
                let best = all
                    .iter()
                    .filter(|v| v.used_nodes <= pt.cell.used_cap && v.remdr >= floor)
                    .map(|v| v.latency)
                    .min();
                assert_eq!(Some(pt.values.latency), best, "{name} uniform({g}) {}", pt.solution_id);
            }
        }
    }
}

#[test]
fn exact_front_covers_every_uniform_point() {
    let ctx = fixture("constrained").heuristic_context().unwrap();
    let exact = opts(Grid::Exact, 1);
    let ranges = estimate_ranges(&ctx, &exact).unwrap();
    let front = sweep(&ctx, &ranges, &exact).unwrap();
    let coarse = sweep(&ctx, &ranges, &opts(Grid::Uniform(8), 1)).unwrap();
    for pt in &coarse.points {
        assert!(front
            .points
            .iter()
            .any(|f| f.values == pt.values || chainforge::pareto::dominates(&f.values, &pt.values)));
    }
}

#[test]
fn thread_count_does_not_change_the_front() {
    let ctx = fixture("constrained").heuristic_context().unwrap();
    let one = opts(Grid::Exact, 1);
    let ranges = estimate_ranges(&ctx, &one).unwrap();
    let a = sweep(&ctx, &ranges, &one).unwrap();
    let b = sweep(&ctx, &ranges, &opts(Grid::Exact, 4)).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn csv_lists_every_point() {
    let ctx = fixture("constrained").heuristic_context().unwrap();
    let o = opts(Grid::Exact, 1);
    let front = sweep(&ctx, &estimate_ranges(&ctx, &o).unwrap(), &o).unwrap();
    let csv = front.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("remdr,used_nodes,latency,solution_id"));
    assert_eq!(lines.count(), front.points.len());
}
