mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;

use invgen::lp::{lp_feasible_strict, lp_solve, Feasibility, LpProblem, LpResult, Relation};
use invgen::numeric::Rat;

use support::fm::{self, FmOutcome};
use support::gen;

fn agrees(p: &LpProblem) -> Result<(), TestCaseError> {
    match (lp_solve(p), fm::maximize(p)) {
        (LpResult::Infeasible, FmOutcome::Infeasible) | (LpResult::Unbounded, FmOutcome::Unbounded) => Ok(()),
        (LpResult::Optimal { value, witness }, FmOutcome::Optimal(v)) => {
            prop_assert_eq!(&value, &v);
            prop_assert!(p.is_feasible_point(&witness));
            prop_assert_eq!(p.objective_at(&witness), value);
            Ok(())
        }
        (got, want) => Err(TestCaseError::fail(format!(
            "simplex {got:?}, elimination {want:?}\n{p}"
        ))),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_matches_elimination(seed in any::<u64>()) {
        agrees(&gen::lp(&mut gen::rng(seed)))?;
    }

    #[test]
    fn strict_feasibility_matches_elimination(seed in any::<u64>(), mask in any::<u8>()) {
        let p = gen::lp(&mut gen::rng(seed));
        let strict: BTreeSet<usize> = (0..p.constraints().len())
            .filter(|i| mask & (1 << i) != 0 && p.constraints()[*i].rel == Relation::Le)
            .collect();
        let want = fm::feasible_strict(&p, &strict);
        match lp_feasible_strict(&p, &strict) {
            Feasibility::Feasible(point) => {
                prop_assert!(want, "simplex found a point the oracle rules out\n{}", p);
                for (i, c) in p.constraints().iter().enumerate() {
                    prop_assert!(c.holds_at(&point));
                    if strict.contains(&i) {
                        prop_assert!(c.lhs_at(&point) < c.rhs);
                    }
                }
            }
            Feasibility::Infeasible => prop_assert!(!want, "oracle finds a point\n{}", p),
        }
    }

    #[test]
    fn positive_row_scaling_keeps_the_optimum(seed in any::<u64>(), k in 1i64..7) {
        let p = gen::lp(&mut gen::rng(seed));
        let mut q = LpProblem::new();
        for i in 0..p.num_vars() {
            q.add_var(format!("x{i}"));
        }
        q.set_objective(p.objective().to_vec());
        for c in p.constraints() {
            let terms = c.terms.iter().map(|(v, a)| (*v, a * &Rat::from(k))).collect();
            q.add_constraint(terms, c.rel, &c.rhs * &Rat::from(k));
        }
        let (a, b) = (lp_solve(&p), lp_solve(&q));
        prop_assert_eq!(a.optimal_value(), b.optimal_value());
    }
}

#[test]
fn box_optimum() {
    let mut p = LpProblem::new();
    let x = p.add_var("x");
    let y = p.add_var("y");
    p.add_constraint(vec![(x, Rat::one())], Relation::Le, Rat::from(3));
    p.add_constraint(vec![(y, Rat::one())], Relation::Le, Rat::new(1, 2));
    p.add_constraint(vec![(x, -Rat::one()), (y, -Rat::one())], Relation::Le, Rat::zero());
    p.set_objective(vec![(x, Rat::from(2)), (y, Rat::one())]);
    assert_eq!(lp_solve(&p).optimal_value(), Some(&Rat::new(13, 2)));
    assert_eq!(fm::maximize(&p), FmOutcome::Optimal(Rat::new(13, 2)));
}

#[test]
fn degenerate_vertex_terminates() {
    // Many constraints tight at the origin.
    let mut p = LpProblem::new();
    let v: Vec<_> = (0..3).map(|i| p.add_var(format!("x{i}"))).collect();
    for (a, b, c) in [(1, 1, 1), (1, -1, 0), (-1, 1, 0), (2, 1, -1), (1, 2, 3), (0, 0, 1)] {
        let terms = vec![(v[0], Rat::from(a)), (v[1], Rat::from(b)), (v[2], Rat::from(c))];
        p.add_constraint(terms, Relation::Le, Rat::zero());
    }
    p.set_objective(vec![(v[0], Rat::one()), (v[1], Rat::one())]);
    let got = lp_solve(&p);
    let want = fm::maximize(&p);
    match (got, want) {
        (LpResult::Optimal { value, .. }, FmOutcome::Optimal(w)) => assert_eq!(value, w),
        (LpResult::Unbounded, FmOutcome::Unbounded) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn empty_problem_is_feasible_at_zero() {
    let p = LpProblem::new();
    assert_eq!(
        lp_solve(&p),
        LpResult::Optimal {
            value: Rat::zero(),
            witness: vec![]
        }
    );
}
