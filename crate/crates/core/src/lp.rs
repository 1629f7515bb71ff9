//! Exact linear programming over the rationals.
//!
//! Problems are `max c·x` subject to `≤`/`=` rows over free real variables.
//! The solver is a dense two-phase primal simplex with Bland's least-index
//! rule, so it cannot cycle and never rounds.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::numeric::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LpVar(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub terms: Vec<(LpVar, Rat)>,
    pub rel: Relation,
    pub rhs: Rat,
}

impl Constraint {
    pub fn lhs_at(&self, point: &[Rat]) -> Rat {
        self.terms.iter().map(|(v, c)| c * &point[v.0]).sum()
    }

    pub fn holds_at(&self, point: &[Rat]) -> bool {
        let lhs = self.lhs_at(point);
        match self.rel {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }
}

/// `max objective` subject to `constraints`, all variables free.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LpProblem {
    names: Vec<String>,
    objective: Vec<(LpVar, Rat)>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpResult {
    Infeasible,
    Unbounded,
    Optimal { value: Rat, witness: Vec<Rat> },
}

impl LpResult {
    pub fn optimal_value(&self) -> Option<&Rat> {
        match self {
            LpResult::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Rat>),
    Infeasible,
}

impl LpProblem {
    pub fn new() -> LpProblem {
        LpProblem::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> LpVar {
        self.names.push(name.into());
        LpVar(self.names.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn var_name(&self, v: LpVar) -> &str {
        &self.names[v.0]
    }

    pub fn set_objective(&mut self, terms: Vec<(LpVar, Rat)>) {
        for (v, _) in &terms {
            assert!(v.0 < self.names.len(), "undeclared LP variable {}", v.0);
        }
        self.objective = terms;
    }

    pub fn objective(&self) -> &[(LpVar, Rat)] {
        &self.objective
    }

    /// Adds a row and returns its index.
    pub fn add_constraint(&mut self, terms: Vec<(LpVar, Rat)>, rel: Relation, rhs: Rat) -> usize {
        for (v, _) in &terms {
            assert!(v.0 < self.names.len(), "undeclared LP variable {}", v.0);
        }
        self.constraints.push(Constraint { terms, rel, rhs });
        self.constraints.len() - 1
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective_at(&self, point: &[Rat]) -> Rat {
        self.objective.iter().map(|(v, c)| c * &point[v.0]).sum()
    }

    pub fn is_feasible_point(&self, point: &[Rat]) -> bool {
        point.len() == self.num_vars() && self.constraints.iter().all(|c| c.holds_at(point))
    }
}

/// Plain-text dump, one constraint per line.
impl fmt::Display for LpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let write_terms = |f: &mut fmt::Formatter<'_>, terms: &[(LpVar, Rat)]| -> fmt::Result {
            if terms.is_empty() {
                return f.write_str("0");
            }
            for (i, (v, c)) in terms.iter().enumerate() {
                let name = &self.names[v.0];
                if i > 0 {
                    f.write_str(if c.is_negative() { " - " } else { " + " })?;
                } else if c.is_negative() {
                    f.write_str("-")?;
                }
                let a = c.abs();
                if a == Rat::one() {
                    write!(f, "{name}")?;
                } else {
                    write!(f, "{a} {name}")?;
                }
            }
            Ok(())
        };
        f.write_str("maximize ")?;
        write_terms(f, &self.objective)?;
        writeln!(f)?;
        f.write_str("subject to\n")?;
        for c in &self.constraints {
            f.write_str("  ")?;
            write_terms(f, &c.terms)?;
            let rel = match c.rel {
                Relation::Le => "<=",
                Relation::Eq => "=",
            };
            writeln!(f, " {rel} {}", c.rhs)?;
        }
        f.write_str("free ")?;
        f.write_str(&self.names.join(" "))?;
        writeln!(f)
    }
}

struct Tableau {
    /// Each row holds `ncols` coefficients followed by the right-hand side.
    rows: Vec<Vec<BigRational>>,
    basis: Vec<usize>,
    /// Objective row: `z + Σ obj[j] x_j = obj[ncols]`.
    obj: Vec<BigRational>,
    ncols: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let width = self.ncols + 1;
        let piv = self.rows[r][col].clone();
        if !piv.is_one() {
            for x in self.rows[r].iter_mut() {
                if !x.is_zero() {
                    *x /= &piv;
                }
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let support: Vec<usize> = (0..width).filter(|&j| !pivot_row[j].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for &j in &support {
                row[j] -= &f * &pivot_row[j];
            }
        }
        if !self.obj[col].is_zero() {
            let f = self.obj[col].clone();
            for &j in &support {
                self.obj[j] -= &f * &pivot_row[j];
            }
        }
        self.rows[r] = pivot_row;
        self.basis[r] = col;
    }

    /// Primal simplex with Bland's rule over columns `< allowed`.
    fn optimize(&mut self, allowed: usize) -> Outcome {
        loop {
            let entering = (0..allowed).find(|&j| self.obj[j].is_negative());
            let Some(col) = entering else {
                return Outcome::Optimal;
            };
            let mut best: Option<(usize, BigRational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[col].is_positive() {
                    continue;
                }
                let ratio = &row[self.ncols] / &row[col];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                None => return Outcome::Unbounded,
                Some((r, _)) => self.pivot(r, col),
            }
        }
    }
}

enum Phase1 {
    Infeasible,
    Feasible { tab: Tableau, nvars: usize },
}

/// Builds the standard-form tableau and runs phase one.
fn phase_one(p: &LpProblem) -> Phase1 {
    let nvars = p.num_vars();
    let n_slack = p.constraints.iter().filter(|c| c.rel == Relation::Le).count();
    let m = p.constraints.len();
    // Rows that need an artificial variable.
    let needs_art: Vec<bool> = p
        .constraints
        .iter()
        .map(|c| c.rel == Relation::Eq || c.rhs.is_negative())
        .collect();
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let art_start = 2 * nvars + n_slack;
    let ncols = art_start + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut slack = 2 * nvars;
    let mut art = art_start;
    for (c, &needs) in p.constraints.iter().zip(&needs_art) {
        let mut row = vec![BigRational::zero(); ncols + 1];
        for (v, coef) in &c.terms {
            let a = coef.as_bigrational();
            row[v.0] += a;
            row[nvars + v.0] -= a;
        }
        let mut slack_col = None;
        if c.rel == Relation::Le {
            row[slack] = BigRational::one();
            slack_col = Some(slack);
            slack += 1;
        }
        row[ncols] = c.rhs.as_bigrational().clone();
        if c.rhs.is_negative() {
            for x in row.iter_mut() {
                *x = -&*x;
            }
        }
        if needs {
            row[art] = BigRational::one();
            basis.push(art);
            art += 1;
        } else {
            basis.push(slack_col.expect("non-artificial rows are slack rows"));
        }
        rows.push(row);
    }

    let mut obj = vec![BigRational::zero(); ncols + 1];
    for c in &mut obj[art_start..ncols] {
        *c = BigRational::one();
    }
    for (row, &b) in rows.iter().zip(&basis) {
        if b >= art_start {
            for j in 0..=ncols {
                obj[j] -= &row[j];
            }
        }
    }
    let mut tab = Tableau {
        rows,
        basis,
        obj,
        ncols,
    };
    if n_art > 0 {
        tab.optimize(ncols);
        if tab.obj[ncols].is_negative() {
            return Phase1::Infeasible;
        }
        // Drive remaining artificials out of the basis, dropping redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art_start {
                match (0..art_start).find(|&j| !tab.rows[i][j].is_zero()) {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for row in tab.rows.iter_mut() {
            let rhs = row[ncols].clone();
            row.truncate(art_start);
            row.push(rhs);
        }
        tab.ncols = art_start;
    }
    Phase1::Feasible { tab, nvars }
}

fn extract_point(tab: &Tableau, nvars: usize) -> Vec<Rat> {
    let mut vals = vec![BigRational::zero(); tab.ncols];
    for (row, &b) in tab.rows.iter().zip(&tab.basis) {
        vals[b] = row[tab.ncols].clone();
    }
    (0..nvars).map(|j| Rat::from(&vals[j] - &vals[nvars + j])).collect()
}

/// Solves `p` exactly.
pub fn lp_solve(p: &LpProblem) -> LpResult {
    let (mut tab, nvars) = match phase_one(p) {
        Phase1::Infeasible => return LpResult::Infeasible,
        Phase1::Feasible { tab, nvars } => (tab, nvars),
    };
    let ncols = tab.ncols;
    let mut obj = vec![BigRational::zero(); ncols + 1];
    for (v, c) in &p.objective {
        obj[v.0] -= c.as_bigrational();
        obj[nvars + v.0] += c.as_bigrational();
    }
    for (row, &b) in tab.rows.iter().zip(&tab.basis) {
        if obj[b].is_zero() {
            continue;
        }
        let f = obj[b].clone();
        for j in 0..=ncols {
            if !row[j].is_zero() {
                obj[j] -= &f * &row[j];
            }
        }
    }
    tab.obj = obj;
    match tab.optimize(ncols) {
        Outcome::Unbounded => LpResult::Unbounded,
        Outcome::Optimal => {
            let witness = extract_point(&tab, nvars);
            let value = p.objective_at(&witness);
            LpResult::Optimal { value, witness }
        }
    }
}

/// Feasibility of `p` where the `≤`-rows listed in `strict_rows` must hold strictly.
///
/// Maximizes a slack `δ ≤ 1` added to every strict row; the system is
/// satisfiable iff the optimum is positive. The objective of `p` is ignored.
pub fn lp_feasible_strict(p: &LpProblem, strict_rows: &BTreeSet<usize>) -> Feasibility {
    let mut q = LpProblem {
        names: p.names.clone(),
        objective: Vec::new(),
        constraints: p.constraints.clone(),
    };
    if strict_rows.is_empty() {
        return match phase_one(&q) {
            Phase1::Infeasible => Feasibility::Infeasible,
            Phase1::Feasible { tab, nvars } => Feasibility::Feasible(extract_point(&tab, nvars)),
        };
    }
    let delta = q.add_var("delta");
    for &r in strict_rows {
        let row = &mut q.constraints[r];
        assert_eq!(row.rel, Relation::Le, "strict rows must be inequalities");
        row.terms.push((delta, Rat::one()));
    }
    q.add_constraint(vec![(delta, Rat::one())], Relation::Le, Rat::one());
    q.set_objective(vec![(delta, Rat::one())]);
    match lp_solve(&q) {
        LpResult::Optimal { value, mut witness } if value.is_positive() => {
            witness.truncate(p.num_vars());
            Feasibility::Feasible(witness)
        }
        LpResult::Unbounded => unreachable!("delta is bounded above"),
        _ => Feasibility::Infeasible,
    }
}
