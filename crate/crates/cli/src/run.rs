use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chainforge::chain_lang::{parse_request, pretty_tree};
use chainforge::graph_build::{combination_count, combine, expand_with_choices, to_dot, VnfGraph};
use chainforge::milp::{build_instance, check_solution, export_lp, ProblemContext};
use chainforge::net_model::DeploymentRequest;
use chainforge::pareto::{estimate_ranges, sweep, ParetoError, SweepOptions};
use chainforge::rational::format_rational;
use chainforge::solver::{rank, solve_with, SolveConfig, SolveResult, Status};
use chainforge::{Problem, ProblemError};
use itertools::Itertools;
use log::info;

use crate::code;
use crate::manifest::{write, Backend, Command, FileRecord, Inputs, Mode, RunManifest};
use crate::Failure;

pub struct Paths {
    pub network: PathBuf,
    pub catalog: PathBuf,
    pub requests: PathBuf,
    pub out: PathBuf,
}

pub fn parse(requests: &Path) -> Result<u8, Failure> {
    let text = fs::read_to_string(requests).map_err(|e| Failure::io(requests, e))?;
    let reqs: Vec<DeploymentRequest> =
        serde_json::from_str(&text).map_err(|e| Failure::semantic(format!("{}: {e}", requests.display())))?;
    let mut worst = code::OK;
    for r in &reqs {
        match parse_request(r) {
            Ok(ast) => println!("{}: {}\n{}", r.id, r.chain, pretty_tree(&ast)),
            Err(e) => {
                let c = if e.is_syntax() { code::SYNTAX } else { code::SEMANTIC };
                worst = worst.max(c);
                println!("{}: {}\n  error: {e}", r.id, r.chain);
            }
        }
    }
    Ok(worst)
}

pub fn execute(paths: &Paths, command: Command) -> Result<u8, Failure> {
    let inputs = Inputs {
        network: FileRecord::of(&paths.network)?,
        catalog: FileRecord::of(&paths.catalog)?,
        requests: FileRecord::of(&paths.requests)?,
    };
    run_in(inputs, command, &paths.out)
}

pub fn rerun(manifest: &Path, out: &Path) -> Result<u8, Failure> {
    let m = RunManifest::load(manifest)?;
    for f in [&m.inputs.network, &m.inputs.catalog, &m.inputs.requests] {
        f.verify()?;
    }
    run_in(m.inputs, m.command, out)
}

/// Files written so far, relative to the run directory.
struct Run<'a> {
    dir: &'a Path,
    outputs: Vec<PathBuf>,
    timings: BTreeMap<String, f64>,
}

impl Run<'_> {
    fn emit(&mut self, rel: impl Into<PathBuf>, text: &str) -> Result<(), Failure> {
        let rel = rel.into();
        write(&self.dir.join(&rel), text)?;
        self.outputs.push(rel);
        Ok(())
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let v = f();
        *self.timings.entry(stage.to_string()).or_default() += start.elapsed().as_secs_f64();
        v
    }
}

fn run_in(inputs: Inputs, command: Command, out: &Path) -> Result<u8, Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;
    let mut run = Run { dir: out, outputs: Vec::new(), timings: BTreeMap::new() };
    let problem =
        run.time("load", || Problem::load(&inputs.network.path, &inputs.catalog.path, &inputs.requests.path))?;
    let code = match &command {
        Command::Expand { mode, dot } => expand(&mut run, &problem, *mode, *dot)?,
        Command::Place { mode, backend: Backend::Export, objective, .. } => {
            export(&mut run, &problem, *mode, *objective)?
        }
        Command::Place { mode, objective, engine, time_limit, threads, .. } => {
            let mut cfg = SolveConfig::new(*objective);
            cfg.time_limit = seconds(*time_limit)?;
            cfg.threads = *threads;
            place(&mut run, &problem, *mode, *engine, &cfg)?
        }
        Command::Pareto { grid, engine, time_limit, threads } => {
            let opts = SweepOptions {
                grid: *grid,
                engine: *engine,
                threads: *threads,
                time_limit: seconds(*time_limit)?,
                seed: 0,
            };
            pareto(&mut run, &problem, &opts)?
        }
    };
    let outputs = run
        .outputs
        .iter()
        .map(|rel| Ok(FileRecord { path: rel.clone(), sha256: crate::manifest::sha256_file(&out.join(rel))? }))
        .collect::<Result<Vec<_>, Failure>>()?;
    let manifest =
        RunManifest { version: env!("CARGO_PKG_VERSION").into(), inputs, command, outputs, timings: run.timings };
    manifest.save(out)?;
    println!("run directory: {}", out.display());
    Ok(code)
}

fn seconds(s: f64) -> Result<Duration, Failure> {
    match Duration::try_from_secs_f64(s) {
        Ok(d) if !d.is_zero() => Ok(d),
        _ => Err(Failure {
            code: code::USAGE,
            message: format!("time limit must be a positive number of seconds, got {s}"),
        }),
    }
}

fn expansion(problem: &Problem, i: usize) -> impl Fn(chainforge::graph_build::ExpansionError) -> ProblemError + '_ {
    move |error| ProblemError::Expansion { request: problem.requests[i].id.clone(), error }
}

/// Graphs per request in the given mode.
fn request_graphs(problem: &Problem, mode: Mode) -> Result<Vec<Vec<VnfGraph>>, ProblemError> {
    match mode {
        Mode::All => problem.all_graphs(),
        Mode::Heuristic => {
            let choices = problem.heuristic_choices();
            (0..problem.requests.len())
                .map(|i| {
                    expand_with_choices(&problem.asts[i], &problem.requests[i], &choices[i])
                        .map(|g| vec![g])
                        .map_err(expansion(problem, i))
                })
                .collect()
        }
    }
}

fn expand(run: &mut Run, problem: &Problem, mode: Mode, dot: bool) -> Result<u8, Failure> {
    let graphs = run.time("expand", || request_graphs(problem, mode))?;
    let mut total: u128 = 1;
    println!("{:<16} {:>12} {:>8}", "request", "combinations", "written");
    for (i, gs) in graphs.iter().enumerate() {
        let id = &problem.requests[i].id;
        let count = combination_count(&problem.asts[i]);
        total = total.saturating_mul(count);
        for (k, g) in gs.iter().enumerate() {
            let stem = format!("graphs/{id}/g{k}");
            run.emit(format!("{stem}.json"), &serde_json::to_string_pretty(g).expect("graph serializes"))?;
            if dot {
                run.emit(format!("{stem}.dot"), &to_dot(g))?;
            }
        }
        println!("{id:<16} {count:>12} {:>8}", gs.len());
    }
    println!("combinations: {total}");
    let summary = serde_json::json!({
        "mode": mode,
        "combinations": total.to_string(),
        "graphs": graphs.iter().zip(&problem.requests).map(|(g, r)| (r.id.clone(), g.len())).collect::<BTreeMap<_, _>>(),
    });
    run.emit("expand.json", &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(code::OK)
}

/// Combined graphs with the per-request graph indices they were built from.
fn combinations(problem: &Problem, mode: Mode) -> Result<Vec<(Vec<usize>, VnfGraph)>, ProblemError> {
    let graphs = request_graphs(problem, mode)?;
    graphs
        .iter()
        .map(|gs| 0..gs.len())
        .multi_cartesian_product()
        .map(|pick| {
            let parts: Vec<VnfGraph> = pick.iter().enumerate().map(|(i, &k)| graphs[i][k].clone()).collect();
            let g = combine(&parts).map_err(|error| ProblemError::Expansion { request: String::new(), error })?;
            Ok((pick, g))
        })
        .collect()
}

fn label(pick: &[usize]) -> String {
    pick.iter().map(|k| format!("g{k}")).join("-")
}

fn export(run: &mut Run, problem: &Problem, mode: Mode, objective: chainforge::milp::Objective) -> Result<u8, Failure> {
    let combos = combinations(problem, mode)?;
    for (pick, g) in combos {
        let inst = build_instance(problem.context(g)?).map_err(ProblemError::from)?;
        let name = match mode {
            Mode::Heuristic => format!("{objective}.lp"),
            Mode::All => format!("{objective}_{}.lp", label(&pick)),
        };
        let text = run.time("export", || export_lp(&inst, objective));
        run.emit(&name, &text)?;
        println!("wrote {name} ({} variables, {} rows)", inst.vars.len(), inst.rows.len());
    }
    Ok(code::OK)
}

fn place(
    run: &mut Run,
    problem: &Problem,
    mode: Mode,
    engine: chainforge::solver::Engine,
    cfg: &SolveConfig,
) -> Result<u8, Failure> {
    let combos = combinations(problem, mode)?;
    let mut contexts: BTreeMap<String, (Vec<usize>, Arc<ProblemContext>)> = BTreeMap::new();
    let mut results = Vec::new();
    for (pick, g) in combos {
        let ctx = problem.context(g)?;
        let name = label(&pick);
        info!("solving combination {name}");
        let r = run
            .time("solve", || solve_with(engine, ctx.clone(), cfg))
            .map_err(|e| Failure { code: code::USAGE, message: e.to_string() })?;
        contexts.insert(name.clone(), (pick, ctx));
        results.push((name, r));
    }
    let tried = results.len();
    let (name, best): (String, SolveResult) = rank(results, cfg.objective)
        .map_err(|e| Failure::semantic(e.to_string()))?
        .into_iter()
        .next()
        .expect("at least one combination");
    let (pick, ctx) = &contexts[&name];
    run.emit("result.json", &best.to_json())?;
    run.emit("graph.json", &serde_json::to_string_pretty(&ctx.graph).expect("graph serializes"))?;
    println!("objective:  {}", cfg.objective);
    println!("status:     {}", best.status);
    if tried > 1 {
        println!("graphs:     {tried} combinations, best {name}");
    }
    if let Some(sol) = &best.solution {
        let report = run.time("check", || check_solution(ctx, sol));
        run.emit("solution.json", &sol.to_json())?;
        run.emit("check.json", &report.to_json())?;
        let v = &sol.objective;
        println!("remdr:      {}", format_rational(&v.remdr));
        println!("used nodes: {}", v.used_nodes);
        println!("latency:    {}", format_rational(&v.latency));
        println!(
            "check:      {}",
            if report.is_clean() { "clean".to_string() } else { format!("{} violations", report.violations.len()) }
        );
        println!("{:<20} node", "function use");
        for (u, node) in &sol.mapping {
            println!("{u:<20} {node}");
        }
    }
    let summary = serde_json::json!({ "combination": pick, "label": name, "tried": tried });
    run.emit("summary.json", &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(match best.status {
        Status::Optimal | Status::Feasible => code::OK,
        Status::Infeasible => code::INFEASIBLE,
        Status::TimeLimit => code::TIME_LIMIT,
    })
}

fn pareto_failure(e: ParetoError) -> Failure {
    let code = match &e {
        ParetoError::Infeasible(_) | ParetoError::NoSolution(_, Status::Infeasible) => code::INFEASIBLE,
        ParetoError::NoSolution(_, Status::TimeLimit) => code::TIME_LIMIT,
        ParetoError::NoSolution(..) => code::SEMANTIC,
        ParetoError::Solve(_) | ParetoError::InvalidGrid(_) => code::USAGE,
    };
    Failure { code, message: e.to_string() }
}

fn pareto(run: &mut Run, problem: &Problem, opts: &SweepOptions) -> Result<u8, Failure> {
    let ctx = problem.heuristic_context()?;
    let ranges = run.time("ranges", || estimate_ranges(&ctx, opts)).map_err(pareto_failure)?;
    let front = run.time("sweep", || sweep(&ctx, &ranges, opts)).map_err(pareto_failure)?;
    run.emit("ranges.json", &serde_json::to_string_pretty(&ranges).expect("ranges serialize"))?;
    run.emit("front.csv", &front.to_csv())?;
    run.emit("front.json", &front.to_json())?;
    println!("{:<6} {:>14} {:>10} {:>10}  status", "id", "remdr", "used", "latency");
    for p in &front.points {
        let v = &p.values;
        println!(
            "{:<6} {:>14} {:>10} {:>10}  {}",
            p.solution_id,
            format_rational(&v.remdr),
            v.used_nodes,
            format_rational(&v.latency),
            p.status
        );
    }
    Ok(if front.points.iter().any(|p| p.status == Status::TimeLimit) { code::TIME_LIMIT } else { code::OK })
}
