//! Independent oracles and random instance generators shared by the
//! integration tests and the acceptance harness.

#![allow(dead_code)]

pub mod fm;
pub mod gen;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use invgen::cfg::Cfg;
use invgen::formula::{Atom, Formula, LinExpr, Var};
use invgen::numeric::Rat;
use invgen::smt::{SmtProblem, SmtResult};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("corpus")
}

/// Every `.inv` file of the corpus, sorted by name.
pub fn corpus_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "inv"))
        .collect();
    files.sort();
    files
}

/// Selector enumeration with Fourier–Motzkin feasibility of each path.
pub fn brute_force_sat(problem: &SmtProblem) -> bool {
    problem.formula.all_path_choices().iter().any(|choice| {
        let path = problem.formula.select_path(choice).expect("total choice");
        fm::atoms_feasible(&path.atoms())
    })
}

pub fn model_satisfies(problem: &SmtProblem, result: &SmtResult) -> bool {
    match result {
        SmtResult::Unsat => true,
        SmtResult::Sat { choice, model } => {
            let value = |v: &Var| model.get(v).cloned().unwrap_or_else(Rat::zero);
            problem.formula.holds_guarded(&value, choice) && problem.formula.holds(&value)
        }
    }
}

/// `v = q` as two atoms.
pub fn pin(v: Var, q: &Rat) -> Formula {
    Formula::and([
        Atom::le(LinExpr::var(v.clone()), q.clone()).into(),
        Atom::le(LinExpr::var(v).scaled(&-Rat::one()), -q).into(),
    ])
}

/// Pins pre- and post-state values.
pub fn pinned(f: &Formula, pre: &[Rat], post: &[Rat]) -> Formula {
    let mut parts = vec![f.clone()];
    for (i, q) in pre.iter().enumerate() {
        parts.push(pin(Var::Pre(i), q));
    }
    for (i, q) in post.iter().enumerate() {
        parts.push(pin(Var::Post(i), q));
    }
    Formula::and(parts).relabel_selectors()
}

/// All edge sequences from `u` to `v` whose inner nodes lie outside `keep`.
pub fn interior_paths(g: &Cfg, u: usize, v: usize, keep: &BTreeSet<usize>) -> Vec<Vec<usize>> {
    fn go(g: &Cfg, at: usize, v: usize, keep: &BTreeSet<usize>, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for e in g.out_edges(at) {
            let d = g.edge(e).dst;
            acc.push(e);
            if d == v {
                out.push(acc.clone());
            }
            if !keep.contains(&d) {
                go(g, d, v, keep, acc, out);
            }
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(g, u, v, keep, &mut Vec::new(), &mut out);
    out
}

/// The relational composition of the statements along `path`.
pub fn compose_path(g: &Cfg, path: &[usize]) -> Formula {
    let k = path.len();
    let state = |t: usize, i: usize| {
        if t == 0 {
            Var::Pre(i)
        } else if t == k {
            Var::Post(i)
        } else {
            Var::aux(&format!("s{t}_{i}"))
        }
    };
    let parts = path.iter().enumerate().map(|(t, &e)| {
        g.edge(e).stmt.map_vars(&|x| match x {
            Var::Pre(i) => state(t, *i),
            Var::Post(i) => state(t + 1, *i),
            Var::Aux(a) => Var::aux(&format!("{a}#{t}")),
        })
    });
    Formula::and(parts).relabel_selectors()
}

pub fn model_point(model: &BTreeMap<Var, Rat>, n: usize, post: bool) -> Vec<Rat> {
    (0..n)
        .map(|i| {
            let v = if post { Var::Post(i) } else { Var::Pre(i) };
            model.get(&v).cloned().unwrap_or_else(Rat::zero)
        })
        .collect()
}

/// An external SMT-LIB2 command from INVGEN_SMT, else `z3` if it is on PATH.
pub fn external_solver_command() -> Option<String> {
    if let Ok(cmd) = std::env::var("INVGEN_SMT") {
        if !cmd.trim().is_empty() {
            return Some(cmd);
        }
    }
    let found = std::process::Command::new("sh")
        .arg("-c")
        .arg("command -v z3")
        .output()
        .ok()?;
    found.status.success().then(|| "z3 -in -smt2".to_string())
}
