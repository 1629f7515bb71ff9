//! The query "can `s` lead from `d` to a state whose `j`-th row exceeds `c`?"

use thiserror::Error;

use super::{Atom, Formula, LinExpr, Rel, Var};
use crate::numeric::ExtRat;
use crate::smt::SmtProblem;
use crate::template::Template;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PsiError {
    #[error("threshold must be below +inf")]
    InfiniteThreshold,
    #[error("abstract value has {got} components, template has {expected} rows")]
    Width { got: usize, expected: usize },
    #[error("template row {0} does not exist")]
    Row(usize),
}

/// Name of the objective variable `v`. The statement lexer rejects `$`, so
/// it never clashes with a user variable.
pub const OBJECTIVE_VAR: &str = "$v";

/// Builds `T·x ≤ d ∧ s ∧ v = T_j·x' ∧ v > c`.
///
/// Rows with `d_i = +inf` are omitted, a `c` of `-inf` drops the last
/// conjunct, and any `d_i = -inf` yields an unsatisfiable problem.
pub fn build_psi(s: &Formula, d: &[ExtRat], template: &Template, j: usize, c: &ExtRat) -> Result<SmtProblem, PsiError> {
    if d.len() != template.num_rows() {
        return Err(PsiError::Width {
            got: d.len(),
            expected: template.num_rows(),
        });
    }
    if j >= template.num_rows() {
        return Err(PsiError::Row(j));
    }
    if *c == ExtRat::PosInf {
        return Err(PsiError::InfiniteThreshold);
    }
    if d.contains(&ExtRat::NegInf) {
        return Ok(SmtProblem::new(Formula::Atom(Atom::falsum())));
    }
    let mut parts = Vec::new();
    for (i, di) in d.iter().enumerate() {
        if let ExtRat::Finite(q) = di {
            parts.push(Atom::le(template.row_expr(i, Var::Pre), q.clone()).into());
        }
    }
    parts.push(s.clone());
    let v = LinExpr::var(Var::aux(OBJECTIVE_VAR));
    let tj = template.row_expr(j, Var::Post);
    parts.push(Atom::new(&v, Rel::Le, &tj).into());
    parts.push(Atom::new(&tj, Rel::Le, &v).into());
    if let ExtRat::Finite(q) = c {
        parts.push(Atom::new(&LinExpr::constant(q.clone()), Rel::Lt, &v).into());
    }
    Ok(SmtProblem::new(Formula::and(parts)))
}
