//! Statements: negation-free linear real arithmetic formulas over pre-state,
//! post-state and auxiliary variables.
//!
//! Every disjunction carries a [`SelectorId`]. A [`PathChoice`] assigns each
//! selector a side and so picks one sequential (disjunction-free) statement out
//! of the merge-simple expansion without ever building that expansion.

mod parse;
mod psi;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::numeric::Rat;

pub use parse::{parse_statement, parse_term, ParseError};
pub use psi::{build_psi, PsiError};

/// A real-valued variable of a statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// Program variable `x_i` before the transition.
    Pre(usize),
    /// Program variable `x_i'` after the transition.
    Post(usize),
    /// Existentially quantified intermediate value.
    Aux(Arc<str>),
}

impl Var {
    pub fn aux(name: &str) -> Var {
        Var::Aux(Arc::from(name))
    }

    pub fn name(&self, program_vars: &[String]) -> String {
        match self {
            Var::Pre(i) => program_vars.get(*i).cloned().unwrap_or_else(|| format!("x{i}")),
            Var::Post(i) => format!("{}'", Var::Pre(*i).name(program_vars)),
            Var::Aux(a) => a.to_string(),
        }
    }
}

/// `Σ coeff·var + constant`. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LinExpr {
    coeffs: BTreeMap<Var, Rat>,
    constant: Rat,
}

impl LinExpr {
    pub fn zero() -> LinExpr {
        LinExpr::default()
    }

    pub fn constant(c: Rat) -> LinExpr {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: Var) -> LinExpr {
        LinExpr::term(v, Rat::one())
    }

    pub fn term(v: Var, c: Rat) -> LinExpr {
        let mut e = LinExpr::zero();
        e.add_term(v, c);
        e
    }

    pub fn coeffs(&self) -> &BTreeMap<Var, Rat> {
        &self.coeffs
    }

    pub fn constant_part(&self) -> &Rat {
        &self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_term(&mut self, v: Var, c: Rat) {
        if c.is_zero() {
            return;
        }
        let sum = match self.coeffs.get(&v) {
            Some(old) => old + &c,
            None => c,
        };
        if sum.is_zero() {
            self.coeffs.remove(&v);
        } else {
            self.coeffs.insert(v, sum);
        }
    }

    pub fn add_constant(&mut self, c: &Rat) {
        self.constant = &self.constant + c;
    }

    pub fn plus(mut self, other: &LinExpr) -> LinExpr {
        for (v, c) in &other.coeffs {
            self.add_term(v.clone(), c.clone());
        }
        self.add_constant(&other.constant);
        self
    }

    pub fn minus(self, other: &LinExpr) -> LinExpr {
        self.plus(&other.scaled(&-Rat::one()))
    }

    pub fn scaled(&self, k: &Rat) -> LinExpr {
        if k.is_zero() {
            return LinExpr::zero();
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn eval(&self, value: &impl Fn(&Var) -> Rat) -> Rat {
        self.coeffs.iter().map(|(v, c)| c * value(v)).sum::<Rat>() + &self.constant
    }

    pub fn map_vars(&self, f: &impl Fn(&Var) -> Var) -> LinExpr {
        let mut e = LinExpr::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            e.add_term(f(v), c.clone());
        }
        e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Le,
    Lt,
}

/// Normalized linear constraint `Σ coeff·var rel rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    lhs: LinExpr,
    pub rel: Rel,
    pub rhs: Rat,
}

impl Atom {
    /// `lhs rel rhs` for arbitrary linear expressions on both sides.
    pub fn new(lhs: &LinExpr, rel: Rel, rhs: &LinExpr) -> Atom {
        let diff = lhs.clone().minus(rhs);
        let bound = -diff.constant_part();
        let mut lhs = diff;
        lhs.constant = Rat::zero();
        Atom { lhs, rel, rhs: bound }
    }

    pub fn le(lhs: LinExpr, rhs: Rat) -> Atom {
        Atom::new(&lhs, Rel::Le, &LinExpr::constant(rhs))
    }

    pub fn lt(lhs: LinExpr, rhs: Rat) -> Atom {
        Atom::new(&lhs, Rel::Lt, &LinExpr::constant(rhs))
    }

    /// An atom that no point satisfies.
    pub fn falsum() -> Atom {
        Atom::le(LinExpr::zero(), -Rat::one())
    }

    pub fn lhs(&self) -> &LinExpr {
        &self.lhs
    }

    pub fn coeffs(&self) -> &BTreeMap<Var, Rat> {
        &self.lhs.coeffs
    }

    pub fn is_strict(&self) -> bool {
        self.rel == Rel::Lt
    }

    pub fn holds(&self, value: &impl Fn(&Var) -> Rat) -> bool {
        let l = self.lhs.eval(value);
        match self.rel {
            Rel::Le => l <= self.rhs,
            Rel::Lt => l < self.rhs,
        }
    }

    pub fn relaxed(&self) -> Atom {
        Atom {
            rel: Rel::Le,
            ..self.clone()
        }
    }

    pub fn map_vars(&self, f: &impl Fn(&Var) -> Var) -> Atom {
        Atom::new(&self.lhs.map_vars(f), self.rel, &LinExpr::constant(self.rhs.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SelectorId(pub u32);

impl fmt::Display for SelectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// Assignment of disjunction sides: `false` picks the left operand, `true` the right.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct PathChoice(BTreeMap<SelectorId, bool>);

impl PathChoice {
    pub fn new() -> PathChoice {
        PathChoice::default()
    }

    pub fn get(&self, s: SelectorId) -> Option<bool> {
        self.0.get(&s).copied()
    }

    pub fn set(&mut self, s: SelectorId, right: bool) {
        self.0.insert(s, right);
    }

    pub fn unset(&mut self, s: SelectorId) {
        self.0.remove(&s);
    }

    pub fn iter(&self) -> impl Iterator<Item = (SelectorId, bool)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(SelectorId, bool)> for PathChoice {
    fn from_iter<I: IntoIterator<Item = (SelectorId, bool)>>(iter: I) -> PathChoice {
        PathChoice(iter.into_iter().collect())
    }
}

impl fmt::Display for PathChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (s, v)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}={}", u8::from(v))?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("no choice for reachable disjunction {0}")]
    MissingSelector(SelectorId),
}

/// Negation-free formula tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    And(Vec<Formula>),
    Or(Box<Formula>, Box<Formula>, SelectorId),
}

impl Formula {
    pub fn truth() -> Formula {
        Formula::And(Vec::new())
    }

    /// Conjunction with nested conjunctions flattened.
    pub fn and(children: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for c in children {
            match c {
                Formula::And(cs) => out.extend(cs),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().expect("length checked")
        } else {
            Formula::And(out)
        }
    }

    /// Disjunction labeled with a placeholder selector; see [`Formula::relabel_selectors`].
    pub fn or(left: Formula, right: Formula) -> Formula {
        Formula::Or(Box::new(left), Box::new(right), SelectorId(u32::MAX))
    }

    /// Renumbers all disjunctions `0, 1, ...` in pre-order.
    pub fn relabel_selectors(self) -> Formula {
        fn go(f: Formula, next: &mut u32) -> Formula {
            match f {
                Formula::Atom(a) => Formula::Atom(a),
                Formula::And(cs) => Formula::And(cs.into_iter().map(|c| go(c, next)).collect()),
                Formula::Or(l, r, _) => {
                    let id = SelectorId(*next);
                    *next += 1;
                    let l = go(*l, next);
                    let r = go(*r, next);
                    Formula::Or(Box::new(l), Box::new(r), id)
                }
            }
        }
        go(self, &mut 0)
    }

    pub fn selectors(&self) -> Vec<SelectorId> {
        let mut out = Vec::new();
        self.visit(&mut |f| {
            if let Formula::Or(_, _, s) = f {
                out.push(*s);
            }
        });
        out
    }

    pub fn has_disjunction(&self) -> bool {
        match self {
            Formula::Atom(_) => false,
            Formula::And(cs) => cs.iter().any(Formula::has_disjunction),
            Formula::Or(..) => true,
        }
    }

    /// Pre-order visit of every node.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::Atom(_) => {}
            Formula::And(cs) => cs.iter().for_each(|c| c.visit(f)),
            Formula::Or(l, r, _) => {
                l.visit(f);
                r.visit(f);
            }
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.visit(&mut |f| {
            if let Formula::Atom(a) = f {
                out.push(a);
            }
        });
        out
    }

    pub fn atom_count(&self) -> usize {
        self.atoms().len()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.atoms()
            .into_iter()
            .flat_map(|a| a.coeffs().keys().cloned())
            .collect()
    }

    /// The atoms of a disjunction-free formula, `None` if it has a disjunction.
    pub fn conjuncts(&self) -> Option<Vec<&Atom>> {
        if self.has_disjunction() {
            None
        } else {
            Some(self.atoms())
        }
    }

    /// Replaces every disjunction by the side chosen in `choice`.
    pub fn select_path(&self, choice: &PathChoice) -> Result<Formula, FormulaError> {
        Ok(match self {
            Formula::Atom(a) => Formula::Atom(a.clone()),
            Formula::And(cs) => Formula::and(
                cs.iter()
                    .map(|c| c.select_path(choice))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Formula::Or(l, r, s) => match choice.get(*s) {
                Some(false) => l.select_path(choice)?,
                Some(true) => r.select_path(choice)?,
                None => return Err(FormulaError::MissingSelector(*s)),
            },
        })
    }

    /// `s[< / ≤]`: every strict atom becomes non-strict.
    pub fn nonstrict_relaxation(&self) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(a.relaxed()),
            Formula::And(cs) => Formula::And(cs.iter().map(Formula::nonstrict_relaxation).collect()),
            Formula::Or(l, r, s) => Formula::Or(
                Box::new(l.nonstrict_relaxation()),
                Box::new(r.nonstrict_relaxation()),
                *s,
            ),
        }
    }

    pub fn map_vars(&self, f: &impl Fn(&Var) -> Var) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(a.map_vars(f)),
            Formula::And(cs) => Formula::And(cs.iter().map(|c| c.map_vars(f)).collect()),
            Formula::Or(l, r, s) => Formula::Or(Box::new(l.map_vars(f)), Box::new(r.map_vars(f)), *s),
        }
    }

    pub fn map_atoms(&self, f: &impl Fn(&Atom) -> Atom) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(f(a)),
            Formula::And(cs) => Formula::And(cs.iter().map(|c| c.map_atoms(f)).collect()),
            Formula::Or(l, r, s) => Formula::Or(Box::new(l.map_atoms(f)), Box::new(r.map_atoms(f)), *s),
        }
    }

    /// Truth at a point, reading disjunctions as plain `∨`.
    pub fn holds(&self, value: &impl Fn(&Var) -> Rat) -> bool {
        match self {
            Formula::Atom(a) => a.holds(value),
            Formula::And(cs) => cs.iter().all(|c| c.holds(value)),
            Formula::Or(l, r, _) => l.holds(value) || r.holds(value),
        }
    }

    /// Truth of the selector-guarded form `(¬a ∧ l) ∨ (a ∧ r)`.
    pub fn holds_guarded(&self, value: &impl Fn(&Var) -> Rat, choice: &PathChoice) -> bool {
        match self {
            Formula::Atom(a) => a.holds(value),
            Formula::And(cs) => cs.iter().all(|c| c.holds_guarded(value, choice)),
            Formula::Or(l, r, s) => match choice.get(*s) {
                Some(false) => l.holds_guarded(value, choice),
                Some(true) => r.holds_guarded(value, choice),
                None => false,
            },
        }
    }

    /// Every choice that is total on the disjunctions it reaches.
    pub fn all_path_choices(&self) -> Vec<PathChoice> {
        fn go(f: &Formula, acc: Vec<PathChoice>) -> Vec<PathChoice> {
            match f {
                Formula::Atom(_) => acc,
                Formula::And(cs) => cs.iter().fold(acc, |acc, c| go(c, acc)),
                Formula::Or(l, r, s) => {
                    let mut out = Vec::new();
                    for mut choice in acc {
                        let mut right = choice.clone();
                        choice.set(*s, false);
                        right.set(*s, true);
                        out.extend(go(l, vec![choice]));
                        out.extend(go(r, vec![right]));
                    }
                    out
                }
            }
        }
        go(self, vec![PathChoice::new()])
    }

    pub fn display<'a>(&'a self, program_vars: &'a [String]) -> FormulaDisplay<'a> {
        FormulaDisplay {
            formula: self,
            program_vars,
        }
    }
}

impl From<Atom> for Formula {
    fn from(a: Atom) -> Formula {
        Formula::Atom(a)
    }
}

/// Renders a formula in the statement grammar.
pub struct FormulaDisplay<'a> {
    formula: &'a Formula,
    program_vars: &'a [String],
}

pub(crate) fn write_linear(
    f: &mut fmt::Formatter<'_>,
    coeffs: &BTreeMap<Var, Rat>,
    program_vars: &[String],
) -> fmt::Result {
    if coeffs.is_empty() {
        return f.write_str("0");
    }
    for (i, (v, c)) in coeffs.iter().enumerate() {
        let name = v.name(program_vars);
        if i > 0 {
            f.write_str(if c.is_negative() { " - " } else { " + " })?;
        } else if c.is_negative() {
            f.write_str("-")?;
        }
        let a = c.abs();
        if a == Rat::one() {
            f.write_str(&name)?;
        } else if a.is_integer() {
            write!(f, "{a}*{name}")?;
        } else {
            write!(f, "({a})*{name}")?;
        }
    }
    Ok(())
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(node: &Formula, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match node {
                Formula::Atom(a) => {
                    write_linear(f, a.coeffs(), vars)?;
                    let rel = if a.is_strict() { "<" } else { "<=" };
                    if a.rhs.is_integer() {
                        write!(f, " {rel} {}", a.rhs)
                    } else {
                        write!(f, " {rel} ({})", a.rhs)
                    }
                }
                Formula::And(cs) if cs.is_empty() => f.write_str("0 <= 0"),
                Formula::And(cs) => {
                    for (i, c) in cs.iter().enumerate() {
                        if i > 0 {
                            f.write_str(" & ")?;
                        }
                        go(c, vars, f)?;
                    }
                    Ok(())
                }
                Formula::Or(l, r, _) => {
                    f.write_str("((")?;
                    go(l, vars, f)?;
                    f.write_str(") | (")?;
                    go(r, vars, f)?;
                    f.write_str("))")
                }
            }
        }
        go(self.formula, self.program_vars, f)
    }
}
