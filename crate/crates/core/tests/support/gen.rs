//! Seeded random instances.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use invgen::cfg::{Cfg, Edge};
use invgen::formula::{parse_statement, Atom, Formula, LinExpr, Var};
use invgen::lp::{LpProblem, Relation};
use invgen::numeric::{ExtRat, Rat};
use invgen::template::Template;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Up to four variables and six constraints, coefficients in `[-9, 9]`.
pub fn lp(rng: &mut ChaCha8Rng) -> LpProblem {
    let mut p = LpProblem::new();
    let n = rng.gen_range(1..=4);
    let vars: Vec<_> = (0..n).map(|i| p.add_var(format!("x{i}"))).collect();
    // Mostly at least as many rows as variables, so that optima are common.
    let m = if rng.gen_ratio(1, 4) {
        rng.gen_range(0..=6)
    } else {
        rng.gen_range(n..=6)
    };
    for _ in 0..m {
        let terms = vars.iter().map(|&v| (v, Rat::from(rng.gen_range(-9..=9)))).collect();
        let rel = if rng.gen_ratio(1, 6) {
            Relation::Eq
        } else {
            Relation::Le
        };
        p.add_constraint(terms, rel, Rat::from(rng.gen_range(-9..=9)));
    }
    p.set_objective(vars.iter().map(|&v| (v, Rat::from(rng.gen_range(-9..=9)))).collect());
    p
}

pub fn atom(rng: &mut ChaCha8Rng, pool: &[Var]) -> Atom {
    let mut lhs = LinExpr::zero();
    let k = rng.gen_range(1..=pool.len().min(3));
    for v in pool.choose_multiple(rng, k) {
        lhs.add_term(v.clone(), Rat::from(rng.gen_range(-3..=3)));
    }
    let rhs = Rat::new(rng.gen_range(-6..=6), rng.gen_range(1..=2));
    if rng.gen_bool(0.3) {
        Atom::lt(lhs, rhs)
    } else {
        Atom::le(lhs, rhs)
    }
}

/// A random negation-free formula with at most `ors` disjunctions.
pub fn formula(rng: &mut ChaCha8Rng, pool: &[Var], ors: usize) -> Formula {
    fn go(rng: &mut ChaCha8Rng, pool: &[Var], budget: &mut usize, depth: usize) -> Formula {
        let roll = rng.gen_range(0..10);
        if depth > 4 || roll < 3 {
            return atom(rng, pool).into();
        }
        if *budget > 0 && roll < 6 {
            *budget -= 1;
            let l = go(rng, pool, budget, depth + 1);
            let r = go(rng, pool, budget, depth + 1);
            return Formula::or(l, r);
        }
        let k = rng.gen_range(1..=3);
        Formula::and((0..k).map(|_| go(rng, pool, budget, depth + 1)).collect::<Vec<_>>())
    }
    let mut budget = ors;
    go(rng, pool, &mut budget, 0).relabel_selectors()
}

/// Inputs for the objective query: a statement over two program variables
/// and one auxiliary, a template, bounds, a row and a threshold.
pub struct PsiInstance {
    pub stmt: Formula,
    pub template: Template,
    pub d: Vec<ExtRat>,
    pub j: usize,
    pub c: ExtRat,
}

pub fn psi_instance(rng: &mut ChaCha8Rng) -> PsiInstance {
    let names = vec!["x".to_string(), "y".to_string()];
    let template = if rng.gen_bool(0.5) {
        Template::interval(names)
    } else {
        Template::octagon(names)
    }
    .expect("template");
    let pool = [Var::Pre(0), Var::Pre(1), Var::Post(0), Var::Post(1), Var::aux("t")];
    let ors = rng.gen_range(0..=10);
    let stmt = formula(rng, &pool, ors);
    let d = (0..template.num_rows())
        .map(|_| match rng.gen_range(0..20) {
            0 => ExtRat::NegInf,
            1..=4 => ExtRat::PosInf,
            _ => ExtRat::Finite(Rat::from(rng.gen_range(-4..=8))),
        })
        .collect();
    let j = rng.gen_range(0..template.num_rows());
    let c = if rng.gen_ratio(1, 5) {
        ExtRat::NegInf
    } else {
        ExtRat::Finite(Rat::new(rng.gen_range(-12..=12), rng.gen_range(1..=2)))
    };
    PsiInstance {
        stmt,
        template,
        d,
        j,
        c,
    }
}

/// One alternative of a random edge: an optional guard `a·x_g ≤ b` and an
/// update `x_i' = a_i·x_i + b_i (+ t)` per variable, where `t ∈ [0, 1]` is a
/// local auxiliary.
#[derive(Debug, Clone)]
pub struct Branch {
    pub guard: Option<(usize, i64, i64)>,
    pub updates: Vec<(i64, i64, bool)>,
}

#[derive(Debug, Clone)]
pub struct RandEdge {
    pub src: usize,
    pub dst: usize,
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone)]
pub struct RandCfg {
    pub vars: Vec<String>,
    pub nodes: usize,
    pub edges: Vec<RandEdge>,
}

fn branch_text(b: &Branch, vars: &[String]) -> String {
    let mut parts = Vec::new();
    if let Some((g, a, c)) = b.guard {
        parts.push(format!("{a}*{} <= {c}", vars[g]));
    }
    let mut uses_t = false;
    for (i, &(a, c, t)) in b.updates.iter().enumerate() {
        let v = &vars[i];
        let tail = if t { " + t" } else { "" };
        uses_t |= t;
        parts.push(format!("{v}' = {a}*{v} + {c}{tail}"));
    }
    if uses_t {
        parts.push("0 <= t & t <= 1".to_string());
    }
    parts.join(" & ")
}

impl RandEdge {
    pub fn text(&self, vars: &[String]) -> String {
        let alts: Vec<String> = self
            .branches
            .iter()
            .map(|b| format!("({})", branch_text(b, vars)))
            .collect();
        alts.join(" | ")
    }

    /// Some successors of `pre`, taking `t ∈ {0, 1}`.
    pub fn successors(&self, pre: &[Rat]) -> Vec<Vec<Rat>> {
        let mut out = Vec::new();
        for b in &self.branches {
            if let Some((g, a, c)) = b.guard {
                if &Rat::from(a) * &pre[g] > Rat::from(c) {
                    continue;
                }
            }
            let uses_t = b.updates.iter().any(|u| u.2);
            let ts: &[i64] = if uses_t { &[0, 1] } else { &[0] };
            for &t in ts {
                let post = b
                    .updates
                    .iter()
                    .zip(pre)
                    .map(|(&(a, c, with_t), x)| {
                        let base = &(&Rat::from(a) * x) + &Rat::from(c);
                        if with_t {
                            &base + &Rat::from(t)
                        } else {
                            base
                        }
                    })
                    .collect();
                out.push(post);
            }
        }
        out
    }
}

impl RandCfg {
    pub fn to_cfg(&self) -> Cfg {
        let names = (0..self.nodes).map(|i| format!("n{i}")).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                src: e.src,
                dst: e.dst,
                stmt: parse_statement(&e.text(&self.vars), &self.vars).expect("generated statement parses"),
            })
            .collect();
        Cfg::new(names, 0, edges).expect("generated graph")
    }

    /// Successors along the edge sequence `path`.
    pub fn run_path(&self, path: &[usize], pre: &[Rat]) -> Vec<Vec<Rat>> {
        let mut states = vec![pre.to_vec()];
        for &e in path {
            states = states.iter().flat_map(|s| self.edges[e].successors(s)).collect();
            states.sort();
            states.dedup();
        }
        states
    }
}

pub fn cfg(rng: &mut ChaCha8Rng) -> RandCfg {
    let nv = rng.gen_range(1..=2);
    let vars: Vec<String> = ["x", "y"][..nv].iter().map(|s| s.to_string()).collect();
    let nodes = rng.gen_range(2..=8);
    let mut edges = Vec::new();
    // A spine so that most nodes are reachable, plus random extra edges.
    for v in 1..nodes {
        let src = rng.gen_range(0..v);
        edges.push((src, v));
    }
    for _ in 0..rng.gen_range(0..=nodes + 2) {
        edges.push((rng.gen_range(0..nodes), rng.gen_range(0..nodes)));
    }
    let edges = edges
        .into_iter()
        .map(|(src, dst)| {
            let k = if rng.gen_ratio(1, 3) { 2 } else { 1 };
            let branches = (0..k)
                .map(|_| Branch {
                    guard: rng.gen_bool(0.6).then(|| {
                        (
                            rng.gen_range(0..nv),
                            *[-1i64, 1].choose(rng).unwrap(),
                            rng.gen_range(-3..=5),
                        )
                    }),
                    updates: (0..nv)
                        .map(|_| (rng.gen_range(-1..=2), rng.gen_range(-2..=3), rng.gen_ratio(1, 5)))
                        .collect(),
                })
                .collect();
            RandEdge { src, dst, branches }
        })
        .collect();
    RandCfg { vars, nodes, edges }
}

pub fn point(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rat> {
    (0..n)
        .map(|_| Rat::new(rng.gen_range(-8..=8), rng.gen_range(1..=2)))
        .collect()
}

pub fn pre_post(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Rat>, Vec<Rat>) {
    (point(rng, n), point(rng, n))
}
