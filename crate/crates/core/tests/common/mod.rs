#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use chainforge::milp::{check_assignment, Assignment, Objective, ObjectiveValues, ProblemContext, Role};
use chainforge::{Problem, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> Problem {
    let d = fixture_dir(name);
    Problem::load(d.join("network.json"), d.join("catalog.json"), d.join("requests.json")).unwrap()
}

pub fn q(n: i128) -> Rational {
    Rational::from_integer(n)
}

/// Simple routes from x to y over non-self-loop edges; the self-loop alone when x = y.
pub fn simple_paths(ctx: &ProblemContext, x: usize, y: usize) -> Vec<Vec<usize>> {
    let edges = ctx.net.edges();
    if x == y {
        return edges.iter().position(|e| e.src == x && e.dst == x).map(|e| vec![vec![e]]).unwrap_or_default();
    }
    let mut out = Vec::new();
    let mut stack = vec![(x, vec![x], Vec::new())];
    while let Some((v, seen, path)) = stack.pop() {
        if v == y {
            out.push(path);
            continue;
        }
        for (i, e) in edges.iter().enumerate() {
            if e.src == v && e.src != e.dst && !seen.contains(&e.dst) {
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

/// Tags that depend on routes; everything else is decided by mapping and roles.
const ROUTE_TAGS: [&str; 10] = ["i", "j", "k", "l", "m", "n", "o", "q", "r", "structure"];

/// Metrics of every feasible placement: all mappings, roles and simple
/// routes, kept when the checker reports nothing.
pub fn feasible_values(ctx: &ProblemContext) -> Vec<ObjectiveValues> {
    let n = ctx.graph.nodes.len();
    let nv = ctx.net.node_count();
    let choices: Vec<Vec<usize>> =
        (0..n).map(|u| ctx.node_location[u].map(|v| vec![v]).unwrap_or_else(|| (0..nv).collect())).collect();
    let role_opts: Vec<Vec<Role>> =
        (0..n).map(|u| if ctx.is_endpoint(u) { vec![Role::Dc] } else { ctx.allowed_roles(u) }).collect();
    let none: Vec<Vec<usize>> = vec![Vec::new(); ctx.graph.edges.len()];
    let mut found = Vec::new();
    let mut idx = vec![0; n];
    loop {
        let mapping: Vec<usize> = (0..n).map(|u| choices[u][idx[u]]).collect();
        let paths: Vec<Vec<Vec<usize>>> =
            ctx.graph.edges.iter().map(|g| simple_paths(ctx, mapping[g.from], mapping[g.to])).collect();
        if paths.iter().all(|p| !p.is_empty()) {
            let mut ridx = vec![0; n];
            loop {
                let roles: Vec<Role> = (0..n).map(|u| role_opts[u][ridx[u]]).collect();
                let bare = Assignment::from_parts(ctx, &mapping, &roles, &none);
                let node_ok =
                    check_assignment(ctx, &bare).violations.iter().all(|v| ROUTE_TAGS.contains(&v.tag.as_str()));
                if node_ok {
                    let mut pidx = vec![0; paths.len()];
                    loop {
                        let routes: Vec<Vec<usize>> =
                            pidx.iter().enumerate().map(|(p, &i)| paths[p][i].clone()).collect();
                        let a = Assignment::from_parts(ctx, &mapping, &roles, &routes);
                        if check_assignment(ctx, &a).is_clean() {
                            found.push(a.objective(ctx));
                        }
                        if !bump(&mut pidx, |p| paths[p].len()) {
                            break;
                        }
                    }
                }
                if !bump(&mut ridx, |u| role_opts[u].len()) {
                    break;
                }
            }
        }
        if !bump(&mut idx, |u| choices[u].len()) {
            break;
        }
    }
    found
}

pub fn best(values: &[ObjectiveValues], obj: Objective) -> Option<Rational> {
    let it = values.iter().map(|v| v.metric(obj));
    if obj.maximize() {
        it.max()
    } else {
        it.min()
    }
}

/// Non-dominated metric triples, sorted by remdr descending, then used, then latency.
pub fn pareto_triples(values: &[ObjectiveValues]) -> Vec<(Rational, u32, Rational)> {
    let set: BTreeSet<(Rational, u32, Rational)> = values.iter().map(|v| (v.remdr, v.used_nodes, v.latency)).collect();
    let dom =
        |a: &(Rational, u32, Rational), b: &(Rational, u32, Rational)| a.0 >= b.0 && a.1 <= b.1 && a.2 <= b.2 && a != b;
    let mut out: Vec<_> = set.iter().filter(|t| !set.iter().any(|o| dom(o, t))).cloned().collect();
    out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    out
}

/// A random instance with at most 4 substrate nodes, 4 uses and 2 requests.
pub fn random_instance(seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = rng.gen_range(2..=4usize);
    let nodes: Vec<String> = (0..nv)
        .map(|i| format!(r#"{{"id":"n{i}","c_d":{},"c_s":{}}}"#, rng.gen_range(0..=3), rng.gen_range(0..=2)))
        .collect();
    let mut edges = Vec::new();
    let mut link = |a: usize, b: usize, rng: &mut ChaCha8Rng| {
        edges.push(format!(
            r#"{{"src":"n{a}","dst":"n{b}","d":{},"l":{}}}"#,
            rng.gen_range(1..=9),
            rng.gen_range(1..=4)
        ));
    };
    for i in 0..nv {
        let j = (i + 1) % nv;
        if nv == 2 && i == 1 {
            break;
        }
        link(i, j, &mut rng);
        link(j, i, &mut rng);
    }
    if nv == 4 && rng.gen_bool(0.3) {
        link(0, 2, &mut rng);
    }
    for i in 0..nv {
        if rng.gen_bool(0.9) {
            edges.push(format!(r#"{{"src":"n{i}","dst":"n{i}","d":{},"l":0}}"#, rng.gen_range(5..=20)));
        }
    }
    let net = format!(r#"{{"nodes":[{}],"edges":[{}]}}"#, nodes.join(","), edges.join(","));
    let catalog = format!(
        r#"{{"functions":[{{"id":"f","p_d":{},"p_s":{},"n_inst":{},"n_req":{}}},{{"id":"g","p_d":1,"p_s":0,"n_inst":2,"n_req":{}}},{{"id":"h","p_d":0,"p_s":1,"n_inst":3,"n_req":2}}]}}"#,
        rng.gen_range(1..=2),
        rng.gen_range(0..=1),
        rng.gen_range(1..=2),
        rng.gen_range(1..=2),
        rng.gen_range(1..=2),
    );
    let nreq = rng.gen_range(1..=2usize);
    let mut budget = 4usize;
    let funcs = ["f", "g", "h"];
    let mut reqs = Vec::new();
    for r in 0..nreq {
        let max = if r + 1 == nreq { budget } else { budget - 1 };
        let k = rng.gen_range(1..=max.min(3));
        budget -= k;
        let uses: Vec<String> = (0..k)
            .map(|i| {
                let ratio = ["1", "1/2", "3/2"][rng.gen_range(0..3)];
                format!(r#"{{"id":"u{i}","function":"{}","ratios":["{ratio}"]}}"#, funcs[rng.gen_range(0..3)])
            })
            .collect();
        let names: Vec<String> = (0..k).map(|i| format!("u{i}")).collect();
        let middle = if k >= 2 && rng.gen_bool(0.3) {
            format!("({}) . {}", names[..2].join(", "), names[2..].join(" . "))
        } else {
            names.join(" . ")
        };
        let middle = middle.trim_end_matches(" . ").to_string();
        let (src, dst) = (rng.gen_range(0..nv), rng.gen_range(0..nv));
        let bound = if rng.gen_bool(0.7) {
            format!(r#"[{{"src":"a","dst":"b","bound":{}}}]"#, rng.gen_range(1..=8))
        } else {
            "[]".into()
        };
        reqs.push(format!(
            r#"{{"id":"r{r}","uses":[{}],"chain":"a . {middle} . b","endpoints":[{{"id":"a","loc":"n{src}"}},{{"id":"b","loc":"n{dst}"}}],"pairs":[["a","b"]],"d_in":{},"l_req":{bound}}}"#,
            uses.join(","),
            rng.gen_range(1..=3)
        ));
        if budget == 0 {
            break;
        }
    }
    Problem::from_json(&net, &catalog, &format!("[{}]", reqs.join(","))).unwrap()
}
