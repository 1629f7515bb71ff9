//! Satisfiability of negation-free formulas with selector-guarded disjunctions.
//!
//! [`InternalSolver`] enumerates selector assignments depth first and checks
//! each partial path with an exact LP. [`SmtLibSolver`] hands the same problem
//! to an external SMT-LIB2 process.

mod smtlib;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{Atom, Formula, PathChoice, Rel, SelectorId, Var};
use crate::lp::{lp_feasible_strict, Feasibility, LpProblem, LpVar, Relation};
use crate::numeric::Rat;

pub use smtlib::{parse_response, write_script, SmtLibError, SmtLibSolver, SmtResponse, SmtStatus};

/// A conjunction of guarded facts, satisfiable iff some selector assignment
/// makes the guarded atoms jointly satisfiable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtProblem {
    pub formula: Formula,
}

impl SmtProblem {
    pub fn new(formula: Formula) -> SmtProblem {
        SmtProblem { formula }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmtResult {
    Sat {
        /// Total on the disjunctions the chosen path reaches.
        choice: PathChoice,
        /// Values for every variable of the formula.
        model: BTreeMap<Var, Rat>,
    },
    Unsat,
}

impl SmtResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SmtResult::Sat { .. })
    }
}

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("solver backend failed: {0}")]
    Backend(String),
    #[error(transparent)]
    SmtLib(#[from] SmtLibError),
}

pub trait SmtBackend {
    fn check(&mut self, problem: &SmtProblem) -> Result<SmtResult, SmtError>;
}

impl<B: SmtBackend + ?Sized> SmtBackend for Box<B> {
    fn check(&mut self, problem: &SmtProblem) -> Result<SmtResult, SmtError> {
        (**self).check(problem)
    }
}

/// A literal `selector = side`.
type Lit = (SelectorId, bool);

/// LP encoding of a conjunction of atoms.
pub(crate) struct ConjunctionLp {
    pub lp: LpProblem,
    pub vars: BTreeMap<Var, LpVar>,
    pub strict: BTreeSet<usize>,
}

pub(crate) fn conjunction_lp<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> ConjunctionLp {
    let mut lp = LpProblem::new();
    let mut vars = BTreeMap::new();
    let mut strict = BTreeSet::new();
    for a in atoms {
        let terms = a
            .coeffs()
            .iter()
            .map(|(v, c)| {
                let lv = *vars.entry(v.clone()).or_insert_with(|| lp.add_var(format!("{v:?}")));
                (lv, c.clone())
            })
            .collect();
        let row = lp.add_constraint(terms, Relation::Le, a.rhs.clone());
        if a.rel == Rel::Lt {
            strict.insert(row);
        }
    }
    ConjunctionLp { lp, vars, strict }
}

/// A satisfying point of a conjunction, if any.
pub fn conjunction_model<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Option<BTreeMap<Var, Rat>> {
    let enc = conjunction_lp(atoms);
    match lp_feasible_strict(&enc.lp, &enc.strict) {
        Feasibility::Infeasible => None,
        Feasibility::Feasible(point) => Some(enc.vars.into_iter().map(|(v, lv)| (v, point[lv.0].clone())).collect()),
    }
}

struct GuardedAtom {
    atom: Atom,
    guard: Vec<Lit>,
}

struct SelectorInfo {
    id: SelectorId,
    guard: Vec<Lit>,
}

/// Atoms and disjunctions paired with the literals that lead to them.
struct Flattened {
    atoms: Vec<GuardedAtom>,
    selectors: Vec<SelectorInfo>,
}

fn flatten(f: &Formula) -> Flattened {
    fn go(f: &Formula, guard: &mut Vec<Lit>, out: &mut Flattened) {
        match f {
            Formula::Atom(a) => out.atoms.push(GuardedAtom {
                atom: a.clone(),
                guard: guard.clone(),
            }),
            Formula::And(cs) => cs.iter().for_each(|c| go(c, guard, out)),
            Formula::Or(l, r, s) => {
                out.selectors.push(SelectorInfo {
                    id: *s,
                    guard: guard.clone(),
                });
                guard.push((*s, false));
                go(l, guard, out);
                guard.pop();
                guard.push((*s, true));
                go(r, guard, out);
                guard.pop();
            }
        }
    }
    let mut out = Flattened {
        atoms: Vec::new(),
        selectors: Vec::new(),
    };
    go(f, &mut Vec::new(), &mut out);
    out.selectors.sort_by_key(|s| s.id);
    out
}

/// Depth-first search over selector assignments with LP theory checks and
/// learned blocking clauses.
#[derive(Debug, Default, Clone)]
pub struct InternalSolver {
    lp_checks: u64,
}

impl InternalSolver {
    pub fn new() -> InternalSolver {
        InternalSolver::default()
    }

    /// Number of LP feasibility checks performed so far.
    pub fn lp_checks(&self) -> u64 {
        self.lp_checks
    }
}

struct Search<'a> {
    flat: &'a Flattened,
    assign: BTreeMap<SelectorId, bool>,
    learned: Vec<Vec<Lit>>,
    lp_checks: u64,
}

impl Search<'_> {
    fn covered(&self, guard: &[Lit], lits: &BTreeMap<SelectorId, bool>) -> bool {
        guard.iter().all(|(s, v)| lits.get(s) == Some(v))
    }

    fn atoms_under<'b>(&'b self, lits: &'b BTreeMap<SelectorId, bool>) -> impl Iterator<Item = &'b Atom> + 'b {
        self.flat
            .atoms
            .iter()
            .filter(move |g| self.covered(&g.guard, lits))
            .map(|g| &g.atom)
    }

    fn feasible(&mut self, lits: &BTreeMap<SelectorId, bool>) -> Option<BTreeMap<Var, Rat>> {
        self.lp_checks += 1;
        conjunction_model(self.atoms_under(lits).collect::<Vec<_>>())
    }

    /// Shrinks the current assignment to a subset that is still infeasible.
    fn learn(&mut self) {
        let mut clause = self.assign.clone();
        let keys: Vec<SelectorId> = clause.keys().copied().collect();
        for s in keys {
            let v = clause.remove(&s).expect("key from clause");
            if self.feasible(&clause).is_some() {
                clause.insert(s, v);
            }
        }
        self.learned.push(clause.into_iter().collect());
    }

    fn blocked(&self) -> bool {
        self.learned
            .iter()
            .any(|c| c.iter().all(|(s, v)| self.assign.get(s) == Some(v)))
    }

    fn run(&mut self) -> Option<(PathChoice, BTreeMap<Var, Rat>)> {
        if self.blocked() {
            return None;
        }
        let assign = self.assign.clone();
        let Some(model) = self.feasible(&assign) else {
            self.learn();
            return None;
        };
        let frontier = self
            .flat
            .selectors
            .iter()
            .find(|s| !self.assign.contains_key(&s.id) && self.covered(&s.guard, &self.assign))
            .map(|s| s.id);
        let Some(s) = frontier else {
            let choice = self.assign.iter().map(|(k, v)| (*k, *v)).collect();
            return Some((choice, model));
        };
        for side in [false, true] {
            self.assign.insert(s, side);
            if let Some(found) = self.run() {
                return Some(found);
            }
            self.assign.remove(&s);
        }
        None
    }
}

impl SmtBackend for InternalSolver {
    fn check(&mut self, problem: &SmtProblem) -> Result<SmtResult, SmtError> {
        let flat = flatten(&problem.formula);
        let mut search = Search {
            flat: &flat,
            assign: BTreeMap::new(),
            learned: Vec::new(),
            lp_checks: 0,
        };
        let found = search.run();
        self.lp_checks += search.lp_checks;
        Ok(match found {
            None => SmtResult::Unsat,
            Some((choice, mut model)) => {
                for v in problem.formula.vars() {
                    model.entry(v).or_insert_with(Rat::zero);
                }
                SmtResult::Sat { choice, model }
            }
        })
    }
}

/// Exhaustive reference: tries every path of the formula in turn.
pub fn brute_force_check(problem: &SmtProblem) -> SmtResult {
    for choice in problem.formula.all_path_choices() {
        let path = problem
            .formula
            .select_path(&choice)
            .expect("enumerated choices are total on their paths");
        if let Some(mut model) = conjunction_model(path.atoms()) {
            for v in problem.formula.vars() {
                model.entry(v).or_insert_with(Rat::zero);
            }
            return SmtResult::Sat { choice, model };
        }
    }
    SmtResult::Unsat
}

/// Checks that `choice` and `model` really satisfy the guarded formula.
pub fn validate_sat(problem: &SmtProblem, choice: &PathChoice, model: &BTreeMap<Var, Rat>) -> bool {
    let value = |v: &Var| model.get(v).cloned().unwrap_or_else(Rat::zero);
    problem.formula.holds_guarded(&value, choice)
}
