use std::fmt;

use serde::{Deserialize, Serialize};

/// A leaf symbol: a function use or an endpoint of the owning request.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Term(pub String);

impl Term {
    pub fn new(symbol: impl Into<String>) -> Self {
        Term(symbol.into())
    }

    pub fn symbol(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModuleSeq(pub Vec<Module>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Module {
    Term(Term),
    /// `( t1, t2, ... )`: the terms may be traversed in any order.
    OptOrder(Vec<Term>),
    /// `s [ m1, m2, ... ]`: branch `i` leaves the splitter with ratio `r(s)[i]`.
    Split {
        splitter: Term,
        branches: Vec<ModuleSeq>,
    },
    /// `s { p1, ..., pk ; body ; n }`: the preamble (which contains `s`) is
    /// freely ordered, then the flow is split into `n` copies of `body`.
    Parallel {
        splitter: Term,
        preamble: Vec<Term>,
        body: ModuleSeq,
        count: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainAst {
    pub root: ModuleSeq,
}

impl ModuleSeq {
    pub fn modules(&self) -> &[Module] {
        &self.0
    }

    /// Every term of the sequence in source order, including nested ones.
    pub fn terms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<&'a Term>) {
        for m in &self.0 {
            match m {
                Module::Term(t) => out.push(t),
                Module::OptOrder(ts) => out.extend(ts),
                Module::Split { splitter, branches } => {
                    out.push(splitter);
                    for b in branches {
                        b.collect_terms(out);
                    }
                }
                Module::Parallel { splitter, preamble, body, .. } => {
                    out.push(splitter);
                    out.extend(preamble);
                    body.collect_terms(out);
                }
            }
        }
    }
}

impl ChainAst {
    pub fn terms(&self) -> Vec<&Term> {
        self.root.terms()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn join<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T], sep: &str) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for ModuleSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        join(f, &self.0, " . ")
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Module::Term(t) => write!(f, "{t}"),
            Module::OptOrder(ts) => {
                f.write_str("(")?;
                join(f, ts, ", ")?;
                f.write_str(")")
            }
            Module::Split { splitter, branches } => {
                write!(f, "{splitter} [")?;
                join(f, branches, ", ")?;
                f.write_str("]")
            }
            Module::Parallel { splitter, preamble, body, count } => {
                write!(f, "{splitter} {{ ")?;
                join(f, preamble, ", ")?;
                write!(f, " ; {body} ; {count} }}")
            }
        }
    }
}

impl fmt::Display for ChainAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

/// Renders the AST back to request-language text.
pub fn unparse(ast: &ChainAst) -> String {
    ast.to_string()
}

/// Indented tree rendering used by the `parse` subcommand.
pub fn pretty_tree(ast: &ChainAst) -> String {
    fn seq(out: &mut String, s: &ModuleSeq, depth: usize) {
        out.push_str(&format!("{}Seq\n", "  ".repeat(depth)));
        for m in &s.0 {
            module(out, m, depth + 1);
        }
    }
    fn module(out: &mut String, m: &Module, depth: usize) {
        let pad = "  ".repeat(depth);
        match m {
            Module::Term(t) => out.push_str(&format!("{pad}Term {t}\n")),
            Module::OptOrder(ts) => {
                let names: Vec<_> = ts.iter().map(Term::symbol).collect();
                out.push_str(&format!("{pad}OptOrder [{}]\n", names.join(", ")));
            }
            Module::Split { splitter, branches } => {
                out.push_str(&format!("{pad}Split {splitter}\n"));
                for b in branches {
                    seq(out, b, depth + 1);
                }
            }
            Module::Parallel { splitter, preamble, body, count } => {
                let names: Vec<_> = preamble.iter().map(Term::symbol).collect();
                out.push_str(&format!("{pad}Parallel {splitter} x{count} preamble [{}]\n", names.join(", ")));
                seq(out, body, depth + 1);
            }
        }
    }
    let mut out = String::new();
    seq(&mut out, &ast.root, 0);
    out
}
