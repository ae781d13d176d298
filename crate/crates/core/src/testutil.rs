//! Exhaustive oracles and random instances shared by unit tests.

use crate::milp::{check_assignment, Assignment, ObjectiveValues, ProblemContext, Role};
use crate::problem::Problem;

/// Every simple path from x to y over non-self-loop edges, or the self-loop when x = y.
fn simple_paths(ctx: &ProblemContext, x: usize, y: usize) -> Vec<Vec<usize>> {
    let edges = ctx.net.edges();
    if x == y {
        return ctx.net.self_loop(x).map(|e| vec![vec![e]]).unwrap_or_default();
    }
    let mut out = Vec::new();
    let mut stack = vec![(x, vec![x], Vec::new())];
    while let Some((v, seen, path)) = stack.pop() {
        if v == y {
            out.push(path);
            continue;
        }
        for (i, e) in edges.iter().enumerate() {
            if e.src == v && !e.is_self_loop() && !seen.contains(&e.dst) {
                let mut s = seen.clone();
                s.push(e.dst);
                let mut p = path.clone();
                p.push(i);
                stack.push((e.dst, s, p));
            }
        }
    }
    out
}

/// Metrics of every placement built from simple routes that the checker accepts.
pub(crate) fn feasible_values(ctx: &ProblemContext) -> Vec<ObjectiveValues> {
    let n = ctx.graph.nodes.len();
    let nv = ctx.net.node_count();
    let mut found = Vec::new();
    let mut mapping = vec![0; n];
    let choices: Vec<Vec<usize>> = (0..n)
        .map(|u| match ctx.node_location[u] {
            Some(v) => vec![v],
            None => (0..nv).collect(),
        })
        .collect();
    let role_opts: Vec<Vec<Role>> =
        (0..n).map(|u| if ctx.is_endpoint(u) { vec![Role::Dc] } else { ctx.allowed_roles(u) }).collect();
    let mut idx = vec![0; n];
    'maps: loop {
        for u in 0..n {
            mapping[u] = choices[u][idx[u]];
        }
        let path_opts: Vec<Vec<Vec<usize>>> =
            ctx.graph.edges.iter().map(|g| simple_paths(ctx, mapping[g.from], mapping[g.to])).collect();
        if path_opts.iter().all(|o| !o.is_empty()) {
            let mut ridx = vec![0; n];
            loop {
                let roles: Vec<Role> = (0..n).map(|u| role_opts[u][ridx[u]]).collect();
                let mut pidx = vec![0; path_opts.len()];
                loop {
                    let routes: Vec<Vec<usize>> =
                        pidx.iter().enumerate().map(|(p, &i)| path_opts[p][i].clone()).collect();
                    let a = Assignment::from_parts(ctx, &mapping, &roles, &routes);
                    if check_assignment(ctx, &a).is_clean() {
                        found.push(a.objective(ctx));
                    }
                    if !bump(&mut pidx, |p| path_opts[p].len()) {
                        break;
                    }
                }
                if !bump(&mut ridx, |u| role_opts[u].len()) {
                    break;
                }
            }
        }
        if !bump(&mut idx, |u| choices[u].len()) {
            break 'maps;
        }
    }
    found
}

fn bump(idx: &mut [usize], len: impl Fn(usize) -> usize) -> bool {
    for i in 0..idx.len() {
        idx[i] += 1;
        if idx[i] < len(i) {
            return true;
        }
        idx[i] = 0;
    }
    false
}

/// A random small instance: 3 or 4 nodes, a ring plus chords, one request of
/// one or two uses.
pub(crate) fn random_problem(seed: u64) -> Problem {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let nv = rng.gen_range(3..=4);
    let mut nodes = Vec::new();
    for i in 0..nv {
        nodes.push(format!(r#"{{"id":"n{i}","c_d":{},"c_s":{}}}"#, rng.gen_range(0..=3), rng.gen_range(0..=3)));
    }
    let mut edges = Vec::new();
    for i in 0..nv {
        edges.push(format!(r#"{{"src":"n{i}","dst":"n{i}","d":50,"l":0}}"#));
        let j = (i + 1) % nv;
        for (a, b) in [(i, j), (j, i)] {
            edges.push(format!(
                r#"{{"src":"n{a}","dst":"n{b}","d":{},"l":{}}}"#,
                rng.gen_range(2..=8),
                rng.gen_range(1..=4)
            ));
        }
    }
    if nv == 4 && rng.gen_bool(0.5) {
        edges.push(format!(r#"{{"src":"n0","dst":"n2","d":{},"l":{}}}"#, rng.gen_range(2..=8), rng.gen_range(1..=4)));
    }
    let net = format!(r#"{{"nodes":[{}],"edges":[{}]}}"#, nodes.join(","), edges.join(","));
    let catalog = format!(
        r#"{{"functions":[{{"id":"f","p_d":{},"p_s":{},"n_inst":{},"n_req":2}},{{"id":"g","p_d":1,"p_s":0,"n_inst":2,"n_req":1}}]}}"#,
        rng.gen_range(1..=2),
        rng.gen_range(0..=1),
        rng.gen_range(1..=2)
    );
    let two = rng.gen_bool(0.5);
    let (uses, chain) = if two {
        (r#"{"id":"u1","function":"f","ratios":[1]},{"id":"u2","function":"g","ratios":[1]}"#, "a1 . u1 . u2 . a2")
    } else {
        (r#"{"id":"u1","function":"f","ratios":[1]}"#, "a1 . u1 . a2")
    };
    let dst = rng.gen_range(0..nv);
    let requests = format!(
        r#"[{{"id":"r","uses":[{uses}],"chain":"{chain}","endpoints":[{{"id":"a1","loc":"n0"}},{{"id":"a2","loc":"n{dst}"}}],
        "pairs":[["a1","a2"]],"d_in":{},"l_req":[{{"src":"a1","dst":"a2","bound":{}}}]}}]"#,
        rng.gen_range(1..=3),
        rng.gen_range(2..=9)
    );
    Problem::from_json(&net, &catalog, &requests).unwrap()
}
