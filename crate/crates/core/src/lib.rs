//! Parsing, expansion and exact placement of chained virtual network functions.
//!
//! The pipeline runs in four stages: a chaining request written in the
//! request language ([`chain_lang`]) is expanded into one or more VNF graphs
//! ([`graph_build`]), the graphs of all requests are combined and turned into
//! a 0-1 program ([`milp`]), and the program is solved exactly
//! ([`solver`], [`pareto`]).

pub mod chain_lang;
pub mod graph_build;
pub mod milp;
pub mod net_model;
pub mod pareto;
pub mod problem;
pub mod rational;
pub mod solver;

#[cfg(test)]
mod testutil;

pub use problem::{Problem, ProblemError};
pub use rational::Rational;
