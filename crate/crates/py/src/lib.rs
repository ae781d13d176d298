//! Python bindings. Exact rationals come back as `fractions.Fraction`.

use std::sync::Arc;
use std::time::Duration;

use ::chainforge::chain_lang::{parse_text, pretty_tree, unparse};
use ::chainforge::graph_build::{combination_count, to_dot};
use ::chainforge::milp::{build_instance, check_solution, export_lp, Objective, ProblemContext};
use ::chainforge::pareto::{estimate_ranges, sweep, Grid, ParetoFront, SweepOptions};
use ::chainforge::solver::{solve_with, Engine, SolveConfig, SolveResult};
use ::chainforge::Rational;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((*r.numer(), *r.denom()))
}

fn seconds(s: f64) -> PyResult<Duration> {
    Duration::try_from_secs_f64(s).map_err(err)
}

/// Normalized text of a chain expression.
#[pyfunction]
fn parse_chain(text: &str) -> PyResult<String> {
    parse_text(text).map(|ast| unparse(&ast)).map_err(err)
}

/// Indented syntax tree of a chain expression.
#[pyfunction]
fn chain_tree(text: &str) -> PyResult<String> {
    parse_text(text).map(|ast| pretty_tree(&ast)).map_err(err)
}

#[pyclass(name = "Problem", frozen)]
struct PyProblem {
    inner: ::chainforge::Problem,
    ctx: Arc<ProblemContext>,
}

impl PyProblem {
    fn wrap(inner: ::chainforge::Problem) -> PyResult<Self> {
        let ctx = inner.heuristic_context().map_err(err)?;
        Ok(PyProblem { inner, ctx })
    }
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn load(network: &str, catalog: &str, requests: &str) -> PyResult<Self> {
        Self::wrap(::chainforge::Problem::load(network, catalog, requests).map_err(err)?)
    }

    #[staticmethod]
    fn from_json(network: &str, catalog: &str, requests: &str) -> PyResult<Self> {
        Self::wrap(::chainforge::Problem::from_json(network, catalog, requests).map_err(err)?)
    }

    #[getter]
    fn request_ids(&self) -> Vec<String> {
        self.inner.requests.iter().map(|r| r.id.clone()).collect()
    }

    /// VNF graphs each request expands to.
    fn combination_counts(&self) -> Vec<u128> {
        self.inner.asts.iter().map(combination_count).collect()
    }

    /// The heuristic graph, combined over all requests, as Graphviz text.
    fn heuristic_dot(&self) -> String {
        to_dot(&self.ctx.graph)
    }

    #[pyo3(signature = (objective = "remdr"))]
    fn export_lp(&self, objective: &str) -> PyResult<String> {
        let obj: Objective = objective.parse().map_err(err)?;
        let inst = build_instance(self.ctx.clone()).map_err(err)?;
        Ok(export_lp(&inst, obj))
    }

    #[pyo3(signature = (objective = "remdr", engine = "decomposed", time_limit = 900.0))]
    fn solve(&self, py: Python<'_>, objective: &str, engine: &str, time_limit: f64) -> PyResult<PySolveResult> {
        let mut cfg = SolveConfig::new(objective.parse().map_err(err)?);
        cfg.time_limit = seconds(time_limit)?;
        let engine: Engine = engine.parse().map_err(err)?;
        let ctx = self.ctx.clone();
        let result = py.detach(move || solve_with(engine, ctx, &cfg)).map_err(err)?;
        let clean = result.solution.as_ref().map(|s| check_solution(&self.ctx, s).is_clean());
        Ok(PySolveResult { result, clean })
    }

    /// `grid` is a step count or "exact".
    #[pyo3(signature = (grid = None, threads = 1, time_limit = 900.0))]
    fn pareto(
        &self,
        py: Python<'_>,
        grid: Option<&Bound<'_, PyAny>>,
        threads: usize,
        time_limit: f64,
    ) -> PyResult<PyFront> {
        let grid = match grid {
            None => Grid::default(),
            Some(g) if g.extract::<String>().is_ok_and(|s| s.eq_ignore_ascii_case("exact")) => Grid::Exact,
            Some(g) => Grid::Uniform(g.extract::<u32>().map_err(|_| err("grid must be a step count or \"exact\""))?),
        };
        let opts = SweepOptions { grid, threads, time_limit: seconds(time_limit)?, ..SweepOptions::default() };
        let ctx = self.ctx.clone();
        let front =
            py.detach(move || estimate_ranges(&ctx, &opts).and_then(|r| sweep(&ctx, &r, &opts))).map_err(err)?;
        Ok(PyFront { front })
    }
}

#[pyclass(name = "SolveResult", frozen)]
struct PySolveResult {
    result: SolveResult,
    clean: Option<bool>,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn status(&self) -> String {
        self.result.status.to_string()
    }

    #[getter]
    fn objective(&self) -> String {
        self.result.objective.to_string()
    }

    #[getter]
    fn value<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyAny>>> {
        self.result.value().map(|v| fraction(py, &v)).transpose()
    }

    /// (remdr, used nodes, latency) of the solution.
    #[getter]
    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Option<(Bound<'py, PyAny>, u32, Bound<'py, PyAny>)>> {
        match &self.result.solution {
            None => Ok(None),
            Some(s) => {
                let v = &s.objective;
                Ok(Some((fraction(py, &v.remdr)?, v.used_nodes, fraction(py, &v.latency)?)))
            }
        }
    }

    /// Function use label to substrate node id.
    #[getter]
    fn mapping(&self) -> Option<Vec<(String, String)>> {
        self.result.solution.as_ref().map(|s| s.mapping.iter().map(|(u, v)| (u.clone(), v.clone())).collect())
    }

    /// Whether the solution passed the independent checker; None without one.
    #[getter]
    fn check_clean(&self) -> Option<bool> {
        self.clean
    }

    fn to_json(&self) -> String {
        self.result.to_json()
    }

    fn __repr__(&self) -> String {
        let value = self.result.value().map(|v| ::chainforge::rational::format_rational(&v));
        format!(
            "SolveResult({}, {}, {})",
            self.result.objective,
            self.result.status,
            value.unwrap_or_else(|| "-".into())
        )
    }
}

#[pyclass(name = "ParetoFront", frozen)]
struct PyFront {
    front: ParetoFront,
}

#[pymethods]
impl PyFront {
    /// (remdr, used nodes, latency, solution id) per point.
    fn points<'py>(&self, py: Python<'py>) -> PyResult<Vec<(Bound<'py, PyAny>, u32, Bound<'py, PyAny>, String)>> {
        self.front
            .points
            .iter()
            .map(|p| {
                let v = &p.values;
                Ok((fraction(py, &v.remdr)?, v.used_nodes, fraction(py, &v.latency)?, p.solution_id.clone()))
            })
            .collect()
    }

    fn to_csv(&self) -> String {
        self.front.to_csv()
    }

    fn to_json(&self) -> String {
        self.front.to_json()
    }

    fn __len__(&self) -> usize {
        self.front.points.len()
    }
}

#[pymodule]
#[pyo3(name = "chainforge")]
fn chainforge_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(parse_chain, m)?)?;
    m.add_function(wrap_pyfunction!(chain_tree, m)?)?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PySolveResult>()?;
    m.add_class::<PyFront>()?;
    Ok(())
}
