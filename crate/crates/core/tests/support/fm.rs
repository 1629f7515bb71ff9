//! Fourier–Motzkin elimination over exact rationals. Exponential, but fine
//! for the handful of variables the random instances use.

use std::collections::{BTreeMap, BTreeSet};

use invgen::formula::{Atom, Var};
use invgen::lp::{LpProblem, LpVar, Relation};
use invgen::numeric::Rat;

/// `Σ coeffs[i]·x_i < rhs` when `strict`, else `≤`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Ineq {
    pub coeffs: Vec<Rat>,
    pub rhs: Rat,
    pub strict: bool,
}

impl Ineq {
    /// Scales so that the first nonzero coefficient has absolute value one.
    fn normalized(mut self) -> Ineq {
        if let Some(lead) = self.coeffs.iter().find(|c| !c.is_zero()).map(Rat::abs) {
            let k = lead.recip();
            for c in &mut self.coeffs {
                *c = &*c * &k;
            }
            self.rhs = &self.rhs * &k;
        }
        self
    }

    fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(Rat::is_zero)
    }

    fn constant_holds(&self) -> bool {
        if self.strict {
            Rat::zero() < self.rhs
        } else {
            Rat::zero() <= self.rhs
        }
    }
}

/// Projects out variable `k`. Parallel duplicates are merged to keep the
/// blowup in check.
pub fn eliminate(rows: &[Ineq], k: usize) -> Vec<Ineq> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut out = BTreeSet::new();
    for r in rows {
        let c = &r.coeffs[k];
        if c.is_positive() {
            pos.push(r);
        } else if c.is_negative() {
            neg.push(r);
        } else {
            out.insert(r.clone());
        }
    }
    for p in &pos {
        let kp = p.coeffs[k].recip();
        for q in &neg {
            let kq = (-&q.coeffs[k]).recip();
            let coeffs = p
                .coeffs
                .iter()
                .zip(&q.coeffs)
                .map(|(a, b)| &(a * &kp) + &(b * &kq))
                .collect();
            let row = Ineq {
                coeffs,
                rhs: &(&p.rhs * &kp) + &(&q.rhs * &kq),
                strict: p.strict || q.strict,
            };
            out.insert(row.normalized());
        }
    }
    tighten(out)
}

/// Keeps only the tightest row among rows with the same left-hand side.
fn tighten(rows: BTreeSet<Ineq>) -> Vec<Ineq> {
    let mut best: BTreeMap<Vec<Rat>, (Rat, bool)> = BTreeMap::new();
    for r in rows {
        match best.get_mut(&r.coeffs) {
            Some((rhs, strict)) => {
                if r.rhs < *rhs || (r.rhs == *rhs && r.strict) {
                    *rhs = r.rhs;
                    *strict = r.strict;
                }
            }
            None => {
                best.insert(r.coeffs, (r.rhs, r.strict));
            }
        }
    }
    best.into_iter()
        .map(|(coeffs, (rhs, strict))| Ineq { coeffs, rhs, strict })
        .collect()
}

/// Substitutes equalities away, then eliminates every variable except
/// `keep` by Fourier–Motzkin, cheapest variable first. `None` means the
/// equalities alone are inconsistent.
pub fn project(mut eqs: Vec<(Vec<Rat>, Rat)>, mut rows: Vec<Ineq>, keep: Option<usize>) -> Option<Vec<Ineq>> {
    while let Some((coeffs, rhs)) = eqs.pop() {
        let pivot = (0..coeffs.len())
            .filter(|&k| !coeffs[k].is_zero())
            .min_by_key(|&k| Some(k) == keep);
        let Some(k) = pivot else {
            if rhs.is_zero() {
                continue;
            }
            return None;
        };
        if Some(k) == keep {
            // Only the kept variable remains: keep the equation as two rows.
            rows.push(Ineq {
                coeffs: coeffs.clone(),
                rhs: rhs.clone(),
                strict: false,
            });
            rows.push(Ineq {
                coeffs: coeffs.iter().map(|c| -c).collect(),
                rhs: -&rhs,
                strict: false,
            });
            continue;
        }
        // x_k = (rhs - Σ_{i≠k} coeffs[i]·x_i) / coeffs[k]
        let inv = coeffs[k].recip();
        let subst = |row_coeffs: &mut Vec<Rat>, row_rhs: &mut Rat| {
            let f = &row_coeffs[k] * &inv;
            if f.is_zero() {
                return;
            }
            for (c, e) in row_coeffs.iter_mut().zip(&coeffs) {
                *c = &*c - &(&f * e);
            }
            *row_rhs = &*row_rhs - &(&f * &rhs);
        };
        for (c, r) in eqs.iter_mut() {
            subst(c, r);
        }
        for row in rows.iter_mut() {
            subst(&mut row.coeffs, &mut row.rhs);
        }
    }
    let n = rows.first().map_or(0, |r| r.coeffs.len());
    let mut rows = tighten(rows.into_iter().map(Ineq::normalized).collect());
    let mut left: Vec<usize> = (0..n).filter(|&k| Some(k) != keep).collect();
    while !left.is_empty() {
        if rows.iter().any(|r| r.is_trivial() && !r.constant_holds()) {
            return Some(vec![Ineq {
                coeffs: vec![Rat::zero(); n],
                rhs: -Rat::one(),
                strict: false,
            }]);
        }
        let cost = |k: usize| {
            let pos = rows.iter().filter(|r| r.coeffs[k].is_positive()).count();
            let neg = rows.iter().filter(|r| r.coeffs[k].is_negative()).count();
            pos * neg
        };
        let (at, &k) = left.iter().enumerate().min_by_key(|(_, &k)| cost(k)).unwrap();
        left.swap_remove(at);
        rows = eliminate(&rows, k);
    }
    Some(rows)
}

pub fn feasible(rows: &[Ineq]) -> bool {
    project(Vec::new(), rows.to_vec(), None).is_some_and(|rows| rows.iter().all(Ineq::constant_holds))
}

pub fn atoms_feasible(atoms: &[&Atom]) -> bool {
    let vars: BTreeSet<&Var> = atoms.iter().flat_map(|a| a.coeffs().keys()).collect();
    let index: BTreeMap<&Var, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let rows: Vec<Ineq> = atoms
        .iter()
        .map(|a| {
            let mut coeffs = vec![Rat::zero(); index.len()];
            for (v, c) in a.coeffs() {
                coeffs[index[v]] = c.clone();
            }
            Ineq {
                coeffs,
                rhs: a.rhs.clone(),
                strict: a.is_strict(),
            }
        })
        .collect();
    feasible(&rows)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FmOutcome {
    Infeasible,
    Unbounded,
    Optimal(Rat),
}

fn dense(terms: &[(LpVar, Rat)], width: usize) -> Vec<Rat> {
    let mut coeffs = vec![Rat::zero(); width];
    for (v, c) in terms {
        coeffs[v.0] = &coeffs[v.0] + c;
    }
    coeffs
}

/// Maximizes the objective of `p` by projecting onto `z = objective`.
pub fn maximize(p: &LpProblem) -> FmOutcome {
    let n = p.num_vars();
    let z = n;
    let mut eqs = Vec::new();
    let mut rows = Vec::new();
    for c in p.constraints() {
        let coeffs = dense(&c.terms, n + 1);
        match c.rel {
            Relation::Eq => eqs.push((coeffs, c.rhs.clone())),
            Relation::Le => rows.push(Ineq {
                coeffs,
                rhs: c.rhs.clone(),
                strict: false,
            }),
        }
    }
    let mut objective: Vec<Rat> = dense(p.objective(), n + 1).iter().map(|c| -c).collect();
    objective[z] = Rat::one();
    eqs.push((objective, Rat::zero()));
    let Some(rows) = project(eqs, rows, Some(z)) else {
        return FmOutcome::Infeasible;
    };
    let mut upper: Option<Rat> = None;
    let mut lower: Option<Rat> = None;
    for r in &rows {
        let a = &r.coeffs[z];
        if a.is_zero() {
            if !r.constant_holds() {
                return FmOutcome::Infeasible;
            }
        } else if a.is_positive() {
            let b = &r.rhs / a;
            if upper.as_ref().is_none_or(|u| b < *u) {
                upper = Some(b);
            }
        } else {
            let b = &r.rhs / a;
            if lower.as_ref().is_none_or(|l| b > *l) {
                lower = Some(b);
            }
        }
    }
    match (lower, upper) {
        (Some(l), Some(u)) if l > u => FmOutcome::Infeasible,
        (_, Some(u)) => FmOutcome::Optimal(u),
        (_, None) => FmOutcome::Unbounded,
    }
}

/// Feasibility of `p` with the rows in `strict` read as `<`.
pub fn feasible_strict(p: &LpProblem, strict: &BTreeSet<usize>) -> bool {
    let n = p.num_vars();
    let mut eqs = Vec::new();
    let mut rows = Vec::new();
    for (i, c) in p.constraints().iter().enumerate() {
        let coeffs = dense(&c.terms, n);
        match c.rel {
            Relation::Eq => eqs.push((coeffs, c.rhs.clone())),
            Relation::Le => rows.push(Ineq {
                coeffs,
                rhs: c.rhs.clone(),
                strict: strict.contains(&i),
            }),
        }
    }
    if rows.is_empty() {
        rows.push(Ineq {
            coeffs: vec![Rat::zero(); n],
            rhs: Rat::zero(),
            strict: false,
        });
    }
    project(eqs, rows, None).is_some_and(|rows| rows.iter().all(Ineq::constant_holds))
}
