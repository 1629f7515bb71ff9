mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;

use invgen::cfg::{Cfg, CfgError, Edge};
use invgen::formula::parse_statement;
use invgen::numeric::Rat;
use invgen::smt::{InternalSolver, SmtBackend, SmtProblem};

use support::gen;

fn graph(nodes: &[&str], edges: &[(usize, usize, &str)]) -> Cfg {
    let vars = vec!["x".to_string()];
    let edges = edges
        .iter()
        .map(|&(src, dst, s)| Edge {
            src,
            dst,
            stmt: parse_statement(s, &vars).unwrap(),
        })
        .collect();
    Cfg::new(nodes.iter().map(|s| s.to_string()).collect(), 0, edges).unwrap()
}

fn reaches(f: &invgen::formula::Formula, pre: i64, post: i64) -> bool {
    let p = SmtProblem::new(support::pinned(f, &[Rat::from(pre)], &[Rat::from(post)]));
    InternalSolver::new().check(&p).unwrap().is_sat()
}

#[test]
fn straight_line_is_composed() {
    let g = graph(&["a", "b", "c"], &[(0, 1, "x' = x + 1"), (1, 2, "x' = 2*x")]);
    let c = g.compress(&BTreeSet::from([2])).unwrap();
    assert_eq!(c.nodes(), ["a", "c"]);
    assert_eq!(c.edges().len(), 1);
    let s = &c.edge(0).stmt;
    assert!(reaches(s, 3, 8));
    assert!(!reaches(s, 3, 7));
}

#[test]
fn join_node_keeps_both_paths() {
    // a -> b twice through different statements, then b -> c.
    let g = graph(
        &["a", "b", "c"],
        &[(0, 1, "x' = x + 1"), (0, 1, "x' = x + 10"), (1, 2, "x' = x")],
    );
    let c = g.compress(&BTreeSet::from([2])).unwrap();
    assert_eq!(c.edges().len(), 1);
    let s = &c.edge(0).stmt;
    assert!(reaches(s, 0, 1));
    assert!(reaches(s, 0, 10));
    assert!(!reaches(s, 0, 5));
}

#[test]
fn self_loop_on_cut_node_survives() {
    let g = graph(&["a", "h"], &[(0, 1, "x' = 0"), (1, 1, "x <= 5 & x' = x + 1")]);
    let cut = g.feedback_vertex_set();
    assert_eq!(cut, BTreeSet::from([1]));
    let c = g.compress(&cut).unwrap();
    assert_eq!(c.edges().len(), 2);
}

#[test]
fn loop_through_interior_needs_a_cut() {
    let g = graph(
        &["a", "b", "c"],
        &[(0, 1, "x' = x"), (1, 2, "x' = x"), (2, 1, "x' = x")],
    );
    assert!(matches!(g.compress(&BTreeSet::new()), Err(CfgError::CyclicInterior(_))));
    let cut = g.feedback_vertex_set();
    assert!(g.compress(&cut).is_ok());
}

#[test]
fn out_of_range_cut_node_is_rejected() {
    let g = graph(&["a", "b"], &[(0, 1, "x' = x")]);
    assert!(matches!(g.compress(&BTreeSet::from([7])), Err(CfgError::NodeIndex(7))));
}

#[test]
fn feedback_vertex_set_breaks_every_cycle() {
    let mut rng = gen::rng(5);
    for _ in 0..200 {
        let g = gen::cfg(&mut rng).to_cfg();
        let cut = g.feedback_vertex_set();
        assert!(g.compress(&cut).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn compression_preserves_one_step_reachability(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let rc = gen::cfg(&mut rng);
        let g = rc.to_cfg();
        let cut = g.feedback_vertex_set();
        let c = g.compress(&cut).unwrap();
        let mut keep = cut.clone();
        keep.insert(g.start());
        let keep: Vec<usize> = keep.into_iter().collect();
        let keep_set: BTreeSet<usize> = keep.iter().copied().collect();
        let mut smt = InternalSolver::new();
        for (a, &u) in keep.iter().enumerate() {
            for (b, &v) in keep.iter().enumerate() {
                let paths = support::interior_paths(&g, u, v, &keep_set);
                let pre = gen::point(&mut rng, rc.vars.len());
                // A sampled successor along some path, else a random point.
                let post = paths
                    .first()
                    .and_then(|p| rc.run_path(p, &pre).into_iter().next())
                    .unwrap_or_else(|| gen::point(&mut rng, rc.vars.len()));
                let in_g = paths.iter().any(|p| {
                    let f = support::pinned(&support::compose_path(&g, p), &pre, &post);
                    smt.check(&SmtProblem::new(f)).unwrap().is_sat()
                });
                let in_c = c.out_edges(a).filter(|&e| c.edge(e).dst == b).any(|e| {
                    let f = support::pinned(&c.edge(e).stmt, &pre, &post);
                    smt.check(&SmtProblem::new(f)).unwrap().is_sat()
                });
                prop_assert_eq!(in_g, in_c);
            }
        }
    }
}
