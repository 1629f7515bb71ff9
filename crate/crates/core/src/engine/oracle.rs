//! Independent checks of a result: plain Kleene iteration and a post-fixpoint
//! certificate.

use super::{path_lp, Bounds, EngineError, EquationSystem};
use crate::formula::{build_psi, Atom, Var};
use crate::lp::{lp_feasible_strict, lp_solve, Feasibility, LpResult};
use crate::numeric::{ExtRat, Rat};
use crate::smt::{conjunction_lp, SmtBackend, SmtResult};

/// One application of the abstract transformer of every equation, with each
/// edge expanded into all of its sequential paths.
fn kleene_step(sys: &EquationSystem, rho: &Bounds) -> Bounds {
    let t = sys.template();
    let m = t.num_rows();
    let cfg = sys.cfg();
    let mut out = Bounds::bottom(sys);
    for j in 0..m {
        out.set(sys.var(cfg.start(), j), ExtRat::PosInf);
    }
    for e in cfg.edges() {
        if e.dst == cfg.start() {
            continue;
        }
        let src = rho.node(e.src);
        if src.contains(&ExtRat::NegInf) {
            continue;
        }
        for choice in e.stmt.all_path_choices() {
            let path = e.stmt.select_path(&choice).expect("enumerated choice");
            let mut atoms: Vec<Atom> = path.atoms().into_iter().cloned().collect();
            for (i, d) in src.iter().enumerate() {
                if let ExtRat::Finite(q) = d {
                    atoms.push(Atom::le(t.row_expr(i, Var::Pre), q.clone()));
                }
            }
            let enc = conjunction_lp(&atoms);
            if lp_feasible_strict(&enc.lp, &enc.strict) == Feasibility::Infeasible {
                continue;
            }
            let relaxed = path.nonstrict_relaxation();
            for j in 0..m {
                let value = match lp_solve(&path_lp(t, &relaxed, src, j)) {
                    LpResult::Infeasible => ExtRat::NegInf,
                    LpResult::Unbounded => ExtRat::PosInf,
                    LpResult::Optimal { value, .. } => ExtRat::Finite(value),
                };
                let x = sys.var(e.dst, j);
                if value > *out.get(x) {
                    out.set(x, value);
                }
            }
        }
    }
    out
}

/// Iterates the abstract transformer from all `-inf` without widening.
/// Returns the limit and the number of steps, or `None` after `max_steps`.
pub fn kleene_oracle(sys: &EquationSystem, max_steps: usize) -> Option<(Bounds, usize)> {
    let mut rho = Bounds::bottom(sys);
    for step in 1..=max_steps {
        let next = kleene_step(sys, &rho);
        if next == rho {
            return Some((rho, step));
        }
        rho = next;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Verified,
    /// A start row is not `+inf`, so some initial state lies outside.
    StartNotTop {
        row: usize,
    },
    /// A transition along `edge` leaves the bounds: `pre` satisfies the source
    /// node's bounds, `post` violates row `row` of the target's.
    Counterexample {
        edge: usize,
        row: usize,
        pre: Vec<Rat>,
        post: Vec<Rat>,
    },
}

/// Checks that no edge leads from inside the bounds of its source to outside
/// the bounds of its target.
pub fn check_post_fixpoint<B: SmtBackend>(
    sys: &EquationSystem,
    bounds: &Bounds,
    smt: &mut B,
) -> Result<CheckOutcome, EngineError> {
    let cfg = sys.cfg();
    let t = sys.template();
    for j in 0..t.num_rows() {
        if *bounds.get(sys.var(cfg.start(), j)) != ExtRat::PosInf {
            return Ok(CheckOutcome::StartNotTop { row: j });
        }
    }
    let n = t.num_vars();
    for (idx, e) in cfg.edges().iter().enumerate() {
        for j in 0..t.num_rows() {
            let target = bounds.get(sys.var(e.dst, j));
            if *target == ExtRat::PosInf {
                continue;
            }
            let psi = build_psi(&e.stmt, bounds.node(e.src), t, j, target)?;
            if let SmtResult::Sat { model, .. } = smt.check(&psi)? {
                let value = |v: Var| model.get(&v).cloned().unwrap_or_else(Rat::zero);
                return Ok(CheckOutcome::Counterexample {
                    edge: idx,
                    row: j,
                    pre: (0..n).map(|i| value(Var::Pre(i))).collect(),
                    post: (0..n).map(|i| value(Var::Post(i))).collect(),
                });
            }
        }
    }
    Ok(CheckOutcome::Verified)
}
