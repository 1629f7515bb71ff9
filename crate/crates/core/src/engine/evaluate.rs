//! Strategy evaluation: the least solution above `rho` of the conjunctive
//! system a strategy selects.

use std::collections::{BTreeMap, BTreeSet};

use super::{Bounds, Choice, Engine, EngineError, Strategy};
use crate::formula::{Formula, Var};
use crate::lp::{LpProblem, LpResult, LpVar, Relation};
use crate::numeric::{ExtRat, Rat};
use crate::smt::SmtBackend;

impl<B: SmtBackend> Engine<'_, B> {
    /// Evaluates `strategy`, given that `rho` is a pre-solution of it.
    ///
    /// Variables whose chosen operand is constant, reads a `-inf` row, or is
    /// unbounded at `rho` are fixed first. Every other variable is the maximum
    /// of its bound over all real pre-solutions of the remaining equations it
    /// depends on, which is one LP per variable.
    pub fn evaluate(&mut self, strategy: &Strategy, rho: &Bounds) -> Result<Bounds, EngineError> {
        let sys = self.sys;
        let n = sys.num_vars();
        let m = sys.template().num_rows();
        let mut pinned: Vec<Option<ExtRat>> = vec![None; n];
        for x in 0..n {
            pinned[x] = match &strategy[x] {
                Choice::Bottom => Some(ExtRat::NegInf),
                Choice::TopConst => Some(ExtRat::PosInf),
                choice => match self.choice_value(x, choice, rho)? {
                    ExtRat::PosInf => Some(ExtRat::PosInf),
                    _ => None,
                },
            };
        }
        // An equation reading a row that is -inf has an empty source.
        loop {
            let mut grew = false;
            for x in 0..n {
                if pinned[x] == Some(ExtRat::NegInf) {
                    continue;
                }
                if let Choice::Path { edge, .. } = &strategy[x] {
                    let src = sys.cfg().edge(*edge).src;
                    if (0..m).any(|i| pinned[sys.var(src, i)] == Some(ExtRat::NegInf)) {
                        pinned[x] = Some(ExtRat::NegInf);
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let mut relaxed: BTreeMap<usize, Formula> = BTreeMap::new();
        for x in 0..n {
            if pinned[x].is_none() {
                if let Choice::Path { edge, path } = &strategy[x] {
                    relaxed.insert(x, self.relaxed_path(*edge, path)?);
                }
            }
        }
        let mut out = rho.clone();
        for x in 0..n {
            let value = match &pinned[x] {
                Some(v) => v.clone(),
                None => {
                    let lp = self.closure_lp(x, strategy, &pinned, &relaxed);
                    match self.solve(&lp) {
                        LpResult::Unbounded => ExtRat::PosInf,
                        LpResult::Optimal { value, .. } => ExtRat::Finite(value),
                        LpResult::Infeasible => {
                            return Err(EngineError::InfeasibleEvaluation {
                                node: sys.cfg().node_name(sys.node_of(x)).to_string(),
                                row: sys.template().label(sys.row_of(x)).to_string(),
                            })
                        }
                    }
                }
            };
            if value < *rho.get(x) {
                return Err(EngineError::Internal(format!(
                    "evaluation lowered {} from {} to {value}",
                    sys.var_name(x),
                    rho.get(x)
                )));
            }
            out.set(x, value);
        }
        Ok(out)
    }

    /// `max b_x` over the pre-solutions of the equations `x` depends on.
    fn closure_lp(
        &self,
        x: usize,
        strategy: &Strategy,
        pinned: &[Option<ExtRat>],
        relaxed: &BTreeMap<usize, Formula>,
    ) -> LpProblem {
        let sys = self.sys;
        let t = sys.template();
        let m = t.num_rows();
        let source = |y: usize| match &strategy[y] {
            Choice::Path { edge, .. } => sys.cfg().edge(*edge).src,
            _ => unreachable!("only path equations are left unpinned"),
        };
        let mut closure = BTreeSet::from([x]);
        let mut stack = vec![x];
        while let Some(y) = stack.pop() {
            let src = source(y);
            for i in 0..m {
                let z = sys.var(src, i);
                if pinned[z].is_none() && closure.insert(z) {
                    stack.push(z);
                }
            }
        }
        let mut lp = LpProblem::new();
        let bound: BTreeMap<usize, LpVar> = closure.iter().map(|&y| (y, lp.add_var(format!("b{y}")))).collect();
        for &y in &closure {
            let mut block: BTreeMap<Var, LpVar> = BTreeMap::new();
            let mut var = |lp: &mut LpProblem, v: &Var| {
                *block
                    .entry(v.clone())
                    .or_insert_with(|| lp.add_var(format!("{y}:{v:?}")))
            };
            for a in relaxed[&y].atoms() {
                let terms = a.coeffs().iter().map(|(v, c)| (var(&mut lp, v), c.clone())).collect();
                lp.add_constraint(terms, Relation::Le, a.rhs.clone());
            }
            // b_y ≤ T_k · y'
            let k = sys.row_of(y);
            let mut terms = vec![(bound[&y], Rat::one())];
            for (v, c) in t.row_expr(k, Var::Post).coeffs() {
                terms.push((var(&mut lp, v), -c));
            }
            lp.add_constraint(terms, Relation::Le, Rat::zero());
            // T_i · y ≤ b_(src, i) for rows that are not +inf
            let src = source(y);
            for i in 0..m {
                let z = sys.var(src, i);
                if pinned[z].is_some() {
                    continue;
                }
                let mut terms: Vec<(LpVar, Rat)> = t
                    .row_expr(i, Var::Pre)
                    .coeffs()
                    .iter()
                    .map(|(v, c)| (var(&mut lp, v), c.clone()))
                    .collect();
                terms.push((bound[&z], -Rat::one()));
                lp.add_constraint(terms, Relation::Le, Rat::zero());
            }
        }
        lp.set_objective(vec![(bound[&x], Rat::one())]);
        lp
    }
}
