//! `chainforge`: parse chaining requests, expand them into VNF graphs, place
//! them, and sweep Pareto fronts. Every run but `parse` writes into a run
//! directory with a manifest that `rerun` can replay.

mod manifest;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chainforge::milp::Objective;
use chainforge::pareto::Grid;
use chainforge::solver::Engine;
use chainforge::ProblemError;
use clap::{Args, Parser, Subcommand};

use manifest::{Backend, Command, Mode};

/// Exit codes. They are part of the interface.
pub mod code {
    pub const OK: u8 = 0;
    /// Unreadable files and bad flags.
    pub const USAGE: u8 = 1;
    pub const SYNTAX: u8 = 2;
    pub const SEMANTIC: u8 = 3;
    pub const INFEASIBLE: u8 = 4;
    pub const TIME_LIMIT: u8 = 5;
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure { code: code::USAGE, message: format!("{}: {e}", path.display()) }
    }

    pub fn semantic(message: String) -> Self {
        Failure { code: code::SEMANTIC, message }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Self {
        let code = match &e {
            _ if e.is_syntax() => code::SYNTAX,
            ProblemError::Model(chainforge::net_model::ModelError::Io { .. }) => code::USAGE,
            _ => code::SEMANTIC,
        };
        Failure { code, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "chainforge", version, about = "Chained network function placement")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Clone)]
struct InputArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    requests: PathBuf,
    /// Run directory; created if missing.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Sub {
    /// Parse every chain of a requests file and print its syntax tree.
    Parse { requests: PathBuf },
    /// Expand requests into VNF graphs.
    Expand {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long, value_enum, default_value = "heuristic")]
        mode: Mode,
        /// Also write Graphviz files.
        #[arg(long)]
        dot: bool,
    },
    /// Solve one placement objective.
    Place {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long, default_value = "remdr")]
        objective: Objective,
        #[arg(long, value_enum, default_value = "builtin")]
        backend: Backend,
        #[arg(long, default_value = "decomposed")]
        engine: Engine,
        #[arg(long, value_enum, default_value = "heuristic")]
        mode: Mode,
        /// Seconds per solve.
        #[arg(long, default_value_t = 900.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Sweep the three-objective Pareto front.
    Pareto {
        #[command(flatten)]
        inputs: InputArgs,
        /// Remaining-rate floors per used-node cap, or `exact`.
        #[arg(long, default_value = "8", value_parser = parse_grid)]
        grid: Grid,
        #[arg(long, default_value = "decomposed")]
        engine: Engine,
        #[arg(long, default_value_t = 900.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Replay a run from its manifest into a new directory.
    Rerun {
        manifest: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    if s.eq_ignore_ascii_case("exact") {
        return Ok(Grid::Exact);
    }
    match s.parse::<u32>() {
        Ok(n) if n > 0 => Ok(Grid::Uniform(n)),
        _ => Err(format!("expected a positive step count or `exact`, got `{s}`")),
    }
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Sub::Parse { requests } => run::parse(&requests),
        Sub::Expand { inputs, mode, dot } => run::execute(&inputs.into(), Command::Expand { mode, dot }),
        Sub::Place { inputs, objective, backend, engine, mode, time_limit, threads } => {
            run::execute(&inputs.into(), Command::Place { mode, objective, backend, engine, time_limit, threads })
        }
        Sub::Pareto { inputs, grid, engine, time_limit, threads } => {
            run::execute(&inputs.into(), Command::Pareto { grid, engine, time_limit, threads })
        }
        Sub::Rerun { manifest, out } => run::rerun(&manifest, &out),
    }
}

impl From<InputArgs> for run::Paths {
    fn from(a: InputArgs) -> Self {
        run::Paths { network: a.network, catalog: a.catalog, requests: a.requests, out: a.out }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CHAINFORGE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { code::USAGE } else { code::OK });
        }
    };
    match dispatch(cli) {
        Ok(c) => ExitCode::from(c),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
