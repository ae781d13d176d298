use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::check::{check_assignment, CheckReport};
use super::instance::{PlacementInstance, VarKind, VarMeta};
use super::solution::PlacementSolution;
use super::{Objective, Relation};
use crate::rational::{format_rational, parse_rational, Rational};

/// Tolerance for reading float values written by external solvers.
pub const IMPORT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("solution file has no value for variable `{0}`")]
    MissingVariable(String),
    #[error("solution file mentions unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("binary variable `{name}` has non-integral value {value}")]
    NonIntegral { name: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpRow {
    pub name: String,
    pub terms: BTreeMap<String, Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// The content of an LP file, for comparing what was written with what an
/// instance holds.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LpModel {
    pub maximize: bool,
    pub objective: BTreeMap<String, Rational>,
    pub rows: Vec<LpRow>,
    /// `(lower, upper)` per variable listed under `Bounds`.
    pub bounds: BTreeMap<String, (Rational, Option<Rational>)>,
    pub binaries: BTreeSet<String>,
}

fn denom_lcm<'a>(values: impl IntoIterator<Item = &'a Rational>) -> i128 {
    values.into_iter().fold(1i128, |acc, v| acc.lcm(v.denom()))
}

fn terminates(r: &Rational) -> bool {
    let mut d = *r.denom();
    while d % 2 == 0 {
        d /= 2;
    }
    while d % 5 == 0 {
        d /= 5;
    }
    d == 1
}

impl LpModel {
    /// What [`export_lp`] writes for `inst`: rows scaled to integer
    /// coefficients, zero terms dropped.
    pub fn of(inst: &PlacementInstance, obj: Objective) -> Self {
        let name = |v: usize| inst.vars[v].name.clone();
        let collect = |terms: &[(usize, Rational)], scale: Rational| {
            let mut out = BTreeMap::new();
            for &(v, c) in terms {
                *out.entry(name(v)).or_insert_with(Rational::zero) += c * scale;
            }
            out.retain(|_, c| !c.is_zero());
            out
        };
        let objective = inst.objective(obj);
        let scale = Rational::from_integer(denom_lcm(objective.iter().map(|(_, c)| c)));
        let mut model =
            LpModel { maximize: obj.maximize(), objective: collect(objective, scale), ..Default::default() };
        for (i, row) in inst.rows.iter().enumerate() {
            let scale = Rational::from_integer(denom_lcm(row.terms.iter().map(|(_, c)| c).chain([&row.rhs])));
            model.rows.push(LpRow {
                name: format!("c{i}_{}", row.tag),
                terms: collect(&row.terms, scale),
                relation: row.relation,
                rhs: row.rhs * scale,
            });
        }
        for var in &inst.vars {
            match var.kind {
                VarKind::Binary => {
                    model.binaries.insert(var.name.clone());
                }
                VarKind::Continuous => {
                    let upper = terminates(&var.upper).then_some(var.upper);
                    model.bounds.insert(var.name.clone(), (var.lower, upper));
                }
            }
        }
        model
    }

    pub fn to_lp_string(&self) -> String {
        let mut out = String::from("\\ placement instance\n");
        out.push_str(if self.maximize { "Maximize\n" } else { "Minimize\n" });
        let fallback = self.binaries.iter().next().or(self.bounds.keys().next()).cloned().unwrap_or_default();
        out.push_str(" obj:");
        write_terms(&mut out, &self.objective, &fallback);
        out.push_str("\nSubject To\n");
        for row in &self.rows {
            let _ = write!(out, " {}:", row.name);
            write_terms(&mut out, &row.terms, &fallback);
            let _ = writeln!(out, " {} {}", row.relation.symbol(), format_rational(&row.rhs));
        }
        out.push_str("Bounds\n");
        for (name, (lo, hi)) in &self.bounds {
            match hi {
                Some(hi) => writeln!(out, " {} <= {name} <= {}", format_rational(lo), format_rational(hi)),
                None => writeln!(out, " {name} >= {}", format_rational(lo)),
            }
            .unwrap();
        }
        out.push_str("Binaries\n");
        for name in &self.binaries {
            let _ = writeln!(out, " {name}");
        }
        out.push_str("End\n");
        out
    }
}

fn write_terms(out: &mut String, terms: &BTreeMap<String, Rational>, fallback: &str) {
    if terms.is_empty() {
        let _ = write!(out, " 0 {fallback}");
        return;
    }
    for (k, (name, c)) in terms.iter().enumerate() {
        if k > 0 && k % 8 == 0 {
            out.push_str("\n   ");
        }
        let sign = if c.is_negative() { "-" } else { "+" };
        let _ = write!(out, " {sign} {} {name}", format_rational(&c.abs()));
    }
}

pub fn export_lp(inst: &PlacementInstance, obj: Objective) -> String {
    LpModel::of(inst, obj).to_lp_string()
}

pub fn write_lp(inst: &PlacementInstance, obj: Objective, path: impl AsRef<Path>) -> Result<(), LpError> {
    let path = path.as_ref();
    std::fs::write(path, export_lp(inst, obj))
        .map_err(|source| LpError::Io { path: path.display().to_string(), source })
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Rows,
    Bounds,
    Binaries,
    Generals,
}

/// Reads the subset of the LP format [`export_lp`] produces.
pub fn parse_lp(text: &str) -> Result<LpModel, LpError> {
    let mut model = LpModel::default();
    let mut section = Section::None;
    // Expression tokens of the objective or of the current row, with the line they started on.
    let mut pending: Option<(usize, Vec<String>)> = None;
    let err = |line: usize, message: String| LpError::Parse { line, message };

    let flush =
        |model: &mut LpModel, section: Section, pending: &mut Option<(usize, Vec<String>)>| -> Result<(), LpError> {
            let Some((line, tokens)) = pending.take() else { return Ok(()) };
            let (name, rest) = tokens.split_first().ok_or_else(|| err(line, "empty expression".into()))?;
            let name = name.trim_end_matches(':').to_string();
            let mut terms = BTreeMap::new();
            let mut sign = Rational::one();
            let mut coef: Option<Rational> = None;
            let mut i = 0;
            while i < rest.len() {
                let t = rest[i].as_str();
                match t {
                    "+" => sign = Rational::one(),
                    "-" => sign = -Rational::one(),
                    "<=" | ">=" | "=" | "=<" | "=>" if section == Section::Rows => {
                        let relation = match t {
                            "<=" | "=<" => Relation::Le,
                            ">=" | "=>" => Relation::Ge,
                            _ => Relation::Eq,
                        };
                        let rhs = rest.get(i + 1).ok_or_else(|| err(line, "missing right-hand side".into()))?;
                        let rhs = parse_rational(rhs).map_err(|e| err(line, e.to_string()))?;
                        terms.retain(|_, c: &mut Rational| !c.is_zero());
                        model.rows.push(LpRow { name, terms, relation, rhs });
                        return Ok(());
                    }
                    _ => match parse_rational(t) {
                        Ok(c) => coef = Some(c),
                        Err(_) => {
                            let c = sign * coef.take().unwrap_or_else(Rational::one);
                            *terms.entry(t.to_string()).or_insert_with(Rational::zero) += c;
                            sign = Rational::one();
                        }
                    },
                }
                i += 1;
            }
            if section == Section::Rows {
                return Err(err(line, format!("row `{name}` has no relation")));
            }
            terms.retain(|_, c| !c.is_zero());
            model.objective = terms;
            Ok(())
        };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('\\').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let head = content.to_ascii_lowercase();
        let next = match head.as_str() {
            "maximize" | "maximum" | "max" => Some((Section::Objective, Some(true))),
            "minimize" | "minimum" | "min" => Some((Section::Objective, Some(false))),
            "subject to" | "such that" | "st" | "s.t." => Some((Section::Rows, None)),
            "bounds" => Some((Section::Bounds, None)),
            "binaries" | "binary" | "bin" => Some((Section::Binaries, None)),
            "generals" | "general" => Some((Section::Generals, None)),
            "end" => Some((Section::None, None)),
            _ => None,
        };
        if let Some((s, max)) = next {
            flush(&mut model, section, &mut pending)?;
            if let Some(max) = max {
                model.maximize = max;
            }
            section = s;
            continue;
        }
        let tokens: Vec<String> = content.split_whitespace().map(str::to_string).collect();
        match section {
            Section::Objective | Section::Rows => {
                if tokens[0].ends_with(':') {
                    flush(&mut model, section, &mut pending)?;
                    pending = Some((line, tokens));
                } else {
                    pending.as_mut().ok_or_else(|| err(line, "expression without a name".into()))?.1.extend(tokens);
                }
            }
            Section::Bounds => match tokens.as_slice() {
                [lo, a, name, b, hi] if a == "<=" && b == "<=" => {
                    let lo = parse_rational(lo).map_err(|e| err(line, e.to_string()))?;
                    let hi = parse_rational(hi).map_err(|e| err(line, e.to_string()))?;
                    model.bounds.insert(name.clone(), (lo, Some(hi)));
                }
                [name, a, lo] if a == ">=" => {
                    let lo = parse_rational(lo).map_err(|e| err(line, e.to_string()))?;
                    model.bounds.insert(name.clone(), (lo, None));
                }
                _ => return Err(err(line, format!("unsupported bound `{content}`"))),
            },
            Section::Binaries => model.binaries.extend(tokens),
            Section::Generals => return Err(err(line, "general integers are not supported".into())),
            Section::None => return Err(err(line, format!("text outside any section: `{content}`"))),
        }
    }
    flush(&mut model, section, &mut pending)?;
    Ok(model)
}

/// Reads `name value` lines. Comment lines, header lines and everything
/// after a row-values section (as some solvers append) are skipped.
fn read_values(text: &str) -> Result<BTreeMap<String, f64>, LpError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with("# Rows") || line.starts_with("# Dual") {
            break;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 || matches!(tokens[0], "Objective" | "Model" | "Status") {
            continue;
        }
        let value: f64 = tokens[1]
            .parse()
            .map_err(|_| LpError::Parse { line: idx + 1, message: format!("bad value `{}`", tokens[1]) })?;
        out.insert(tokens[0].to_string(), value);
    }
    Ok(out)
}

/// Turns solver output back into a solution and checks it against the
/// original constraints.
pub fn import_solution_str(inst: &PlacementInstance, text: &str) -> Result<(PlacementSolution, CheckReport), LpError> {
    let raw = read_values(text)?;
    if let Some(name) = raw.keys().find(|n| inst.var_by_name(n).is_none()) {
        return Err(LpError::UnknownVariable(name.clone()));
    }
    let mut values = vec![Rational::zero(); inst.vars.len()];
    for (id, var) in inst.vars.iter().enumerate() {
        let &x = raw.get(&var.name).ok_or_else(|| LpError::MissingVariable(var.name.clone()))?;
        if var.kind == VarKind::Binary {
            let r = x.round();
            if (x - r).abs() > IMPORT_TOLERANCE || !(r == 0.0 || r == 1.0) {
                return Err(LpError::NonIntegral { name: var.name.clone(), value: x });
            }
            values[id] = Rational::from_integer(r as i128);
        }
    }
    let mut a = inst.assignment_of(&values);
    let ctx = &inst.ctx;
    // Continuous values are recomputed exactly from the binaries.
    a.recompute_continuous(ctx);
    // Values off by more than the tolerance are kept so the checker reports them.
    for var in &inst.vars {
        let slot = match var.meta {
            VarMeta::Remdr(e) => &mut a.remdr[e],
            VarMeta::Lat(p) => &mut a.lat[p],
            _ => continue,
        };
        let x = raw[&var.name];
        let exact = crate::rational::to_f64(slot);
        if (x - exact).abs() > IMPORT_TOLERANCE * exact.abs().max(1.0) {
            *slot = Rational::approximate_float(x).unwrap_or_default();
        }
    }
    let report = check_assignment(ctx, &a);
    Ok((PlacementSolution::from_assignment(ctx, &a), report))
}

pub fn import_solution(
    inst: &PlacementInstance,
    path: impl AsRef<Path>,
) -> Result<(PlacementSolution, CheckReport), LpError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| LpError::Io { path: path.display().to_string(), source })?;
    import_solution_str(inst, &text)
}
