//! The placement problem as a solver-independent 0-1 program.
//!
//! [`ProblemContext`] holds the inputs and the indices derived from them,
//! [`PlacementInstance`] is the linearized program, and [`check_solution`]
//! re-evaluates the original quadratic constraints on a candidate solution.

mod check;
mod context;
mod instance;
mod lp;
mod solution;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use check::{check_assignment, check_solution, CheckReport, Violation};
pub use context::{BoundGroup, ProblemContext};
pub use instance::{
    build_instance, build_instance_with, linearize_product, BuildOptions, PlacementInstance, Row, Var, VarId, VarKind,
    VarMeta,
};
pub use lp::{
    export_lp, import_solution, import_solution_str, parse_lp, write_lp, LpError, LpModel, LpRow, IMPORT_TOLERANCE,
};
pub use solution::{Assignment, EdgeRemaining, ObjectiveValues, PlacementSolution, Role, Route};

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("graph node `{node}` requests unknown function `{function}`")]
    UnknownFunction { node: String, function: String },
    #[error("endpoint `{node}` is located at unknown node `{location}`")]
    UnknownLocation { node: String, location: String },
    #[error("variable name `{0}` is generated twice; rename ids so they do not collide")]
    NameCollision(String),
    #[error("the graph has no function uses")]
    Empty,
    #[error("cannot linearize a product with non-binary variable `{0}`")]
    NotBinary(String),
}

/// The three placement objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Objective {
    /// Maximize the remaining data rate summed over non-self-loop edges.
    #[serde(rename = "REMDR")]
    Remdr,
    /// Minimize the number of nodes hosting at least one instance.
    #[serde(rename = "USED_NODES")]
    UsedNodes,
    /// Minimize path latency summed over all paths of every bounded endpoint pair.
    #[serde(rename = "LATENCY")]
    Latency,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Remdr, Objective::UsedNodes, Objective::Latency];

    pub fn maximize(self) -> bool {
        self == Objective::Remdr
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::Remdr => "REMDR",
            Objective::UsedNodes => "USED_NODES",
            Objective::Latency => "LATENCY",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "remdr" => Ok(Objective::Remdr),
            "used_nodes" | "used" => Ok(Objective::UsedNodes),
            "latency" | "lat" => Ok(Objective::Latency),
            _ => Err(format!("unknown objective `{s}` (expected remdr, used_nodes or latency)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn holds(self, lhs: &crate::Rational, rhs: &crate::Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Constraint family of a row or a violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Every use and endpoint is mapped to exactly one node.
    A,
    /// Endpoints sit at their fixed location.
    B,
    /// Instances exist exactly where uses of the function are mapped.
    C,
    /// A use runs either as a switch or as a data-center function.
    D,
    /// Role forced for functions placeable on one node kind only.
    E,
    /// Node compute capacity, data-center and switch.
    F,
    /// Instance count per function.
    G,
    /// Requests per instance.
    H,
    /// Path edges only between the nodes the two uses are mapped to.
    I,
    /// Paths start once, at the source node.
    J,
    /// Paths end once, at the target node.
    K,
    /// Flow preservation at intermediate nodes.
    L,
    /// No self-loops on paths between distinct nodes, no back-and-forth edges.
    M,
    /// Edge data-rate capacity.
    N,
    /// Latency bound of an endpoint pair.
    O,
    /// Used-node marking.
    P,
    /// Remaining data rate.
    Q,
    /// Path latency.
    R,
    /// Product linearization rows.
    #[serde(rename = "lin")]
    Lin,
    /// Extra metric bounds added by a solver configuration.
    #[serde(rename = "bound")]
    Bound,
}

impl Family {
    /// The families of the original quadratic model, without linearization rows or extra bounds.
    pub const MODEL: [Family; 18] = [
        Family::A,
        Family::B,
        Family::C,
        Family::D,
        Family::E,
        Family::F,
        Family::G,
        Family::H,
        Family::I,
        Family::J,
        Family::K,
        Family::L,
        Family::M,
        Family::N,
        Family::O,
        Family::P,
        Family::Q,
        Family::R,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::A => "a",
            Family::B => "b",
            Family::C => "c",
            Family::D => "d",
            Family::E => "e",
            Family::F => "f",
            Family::G => "g",
            Family::H => "h",
            Family::I => "i",
            Family::J => "j",
            Family::K => "k",
            Family::L => "l",
            Family::M => "m",
            Family::N => "n",
            Family::O => "o",
            Family::P => "p",
            Family::Q => "q",
            Family::R => "r",
            Family::Lin => "lin",
            Family::Bound => "bound",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// An epsilon-constraint style bound on one metric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricBound {
    pub metric: Objective,
    pub relation: Relation,
    #[serde(with = "crate::rational::serde_str")]
    pub value: crate::Rational,
}

impl MetricBound {
    pub fn new(metric: Objective, relation: Relation, value: crate::Rational) -> Self {
        MetricBound { metric, relation, value }
    }

    pub fn holds(&self, values: &ObjectiveValues) -> bool {
        self.relation.holds(&values.metric(self.metric), &self.value)
    }
}

#[cfg(test)]
mod tests;
