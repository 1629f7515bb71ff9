//! Max-strategy iteration on the fixpoint equation system of a program and a
//! template.
//!
//! Every pair of a node `v` and a template row `j` is one fixpoint variable
//! `d[v,j]`. The start node's variables are the constant `+inf`; any other
//! variable is the maximum, over incoming edges, of the best bound the edge's
//! statement yields from the source node's values.

mod evaluate;
mod improve;
mod oracle;

use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::cfg::Cfg;
use crate::formula::{Formula, PathChoice, PsiError};
use crate::lp::{lp_solve, LpProblem, LpResult};
use crate::numeric::ExtRat;
use crate::smt::{SmtBackend, SmtError};
use crate::template::Template;

pub use oracle::{check_post_fixpoint, kleene_oracle, CheckOutcome};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Psi(#[from] PsiError),
    #[error("internal error: strategy evaluation for node `{node}` row `{row}` is infeasible")]
    InfeasibleEvaluation { node: String, row: String },
    #[error("internal error: {0}")]
    Internal(String),
}

/// The equation system of a graph and a template.
#[derive(Debug, Clone)]
pub struct EquationSystem {
    cfg: Cfg,
    template: Template,
}

impl EquationSystem {
    pub fn new(cfg: Cfg, template: Template) -> EquationSystem {
        EquationSystem { cfg, template }
    }

    pub fn cfg(&self) -> &Cfg {
        &self.cfg
    }

    pub fn template(&self) -> &Template {
        &self.template
    }

    pub fn num_vars(&self) -> usize {
        self.cfg.num_nodes() * self.template.num_rows()
    }

    pub fn var(&self, node: usize, row: usize) -> usize {
        node * self.template.num_rows() + row
    }

    pub fn node_of(&self, x: usize) -> usize {
        x / self.template.num_rows()
    }

    pub fn row_of(&self, x: usize) -> usize {
        x % self.template.num_rows()
    }

    pub fn is_start_var(&self, x: usize) -> bool {
        self.node_of(x) == self.cfg.start()
    }

    pub fn var_name(&self, x: usize) -> String {
        format!(
            "d[{}, {}]",
            self.cfg.node_name(self.node_of(x)),
            self.template.label(self.row_of(x))
        )
    }
}

/// One operand of a variable's max.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Choice {
    Bottom,
    TopConst,
    Path { edge: usize, path: PathChoice },
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Bottom => f.write_str("-inf"),
            Choice::TopConst => f.write_str("inf"),
            Choice::Path { edge, path } => write!(f, "edge {edge} {path}"),
        }
    }
}

pub type Strategy = Vec<Choice>;

/// A value for every fixpoint variable, indexed as in [`EquationSystem::var`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bounds {
    rows: usize,
    values: Vec<ExtRat>,
}

impl Bounds {
    pub fn bottom(sys: &EquationSystem) -> Bounds {
        Bounds::uniform(sys, ExtRat::NegInf)
    }

    pub fn uniform(sys: &EquationSystem, value: ExtRat) -> Bounds {
        Bounds {
            rows: sys.template.num_rows(),
            values: vec![value; sys.num_vars()],
        }
    }

    /// Bounds from per-node vectors.
    pub fn from_nodes(per_node: Vec<Vec<ExtRat>>) -> Bounds {
        let rows = per_node.first().map_or(0, Vec::len);
        Bounds {
            rows,
            values: per_node.into_iter().flatten().collect(),
        }
    }

    pub fn get(&self, x: usize) -> &ExtRat {
        &self.values[x]
    }

    pub fn set(&mut self, x: usize, v: ExtRat) {
        self.values[x] = v;
    }

    pub fn values(&self) -> &[ExtRat] {
        &self.values
    }

    pub fn node(&self, u: usize) -> &[ExtRat] {
        &self.values[u * self.rows..(u + 1) * self.rows]
    }

    pub fn num_nodes(&self) -> usize {
        self.values.len().checked_div(self.rows).unwrap_or(0)
    }

    /// Pointwise `self ≤ other`.
    pub fn le(&self, other: &Bounds) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub improvement_steps: u64,
    pub smt_queries: u64,
    pub lp_solves: u64,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub step: u64,
    /// Variables whose choice changed, with the new choice.
    pub changed: Vec<(usize, Choice)>,
    pub bounds: Bounds,
    pub stats: Stats,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Pick the best improving choice per variable instead of the first.
    pub local_opt: bool,
    /// Stop after this many improvement steps.
    pub max_iters: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub bounds: Bounds,
    pub strategy: Strategy,
    pub stats: Stats,
    /// `false` if `max_iters` stopped the iteration before it stabilized; the
    /// bounds are then an under-approximation of the least solution.
    pub converged: bool,
    pub trace: Vec<TraceRecord>,
}

/// Shared state of one analysis: the system, the solver and the counters.
pub struct Engine<'a, B: SmtBackend> {
    sys: &'a EquationSystem,
    smt: B,
    stats: Stats,
}

impl<'a, B: SmtBackend> Engine<'a, B> {
    pub fn new(sys: &'a EquationSystem, smt: B) -> Engine<'a, B> {
        Engine {
            sys,
            smt,
            stats: Stats::default(),
        }
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub fn into_backend(self) -> B {
        self.smt
    }

    fn solve(&mut self, lp: &LpProblem) -> LpResult {
        self.stats.lp_solves += 1;
        lp_solve(lp)
    }

    /// Value of the `j`-th row after one sequential path of `edge`, started
    /// from the polyhedron `T·x ≤ src`.
    fn path_value(&mut self, edge: usize, path: &PathChoice, src: &[ExtRat], j: usize) -> Result<ExtRat, EngineError> {
        if src.contains(&ExtRat::NegInf) {
            return Ok(ExtRat::NegInf);
        }
        let relaxed = self.relaxed_path(edge, path)?;
        let lp = path_lp(self.sys.template(), &relaxed, src, j);
        Ok(match self.solve(&lp) {
            LpResult::Infeasible => ExtRat::NegInf,
            LpResult::Unbounded => ExtRat::PosInf,
            LpResult::Optimal { value, .. } => ExtRat::Finite(value),
        })
    }

    fn relaxed_path(&self, edge: usize, path: &PathChoice) -> Result<Formula, EngineError> {
        self.sys
            .cfg()
            .edge(edge)
            .stmt
            .select_path(path)
            .map(|f| f.nonstrict_relaxation())
            .map_err(|e| EngineError::Internal(format!("strategy path on edge {edge}: {e}")))
    }

    /// Value of one choice at `rho`.
    fn choice_value(&mut self, x: usize, choice: &Choice, rho: &Bounds) -> Result<ExtRat, EngineError> {
        Ok(match choice {
            Choice::Bottom => ExtRat::NegInf,
            Choice::TopConst => ExtRat::PosInf,
            Choice::Path { edge, path } => {
                let src = self.sys.cfg().edge(*edge).src;
                let j = self.sys.row_of(x);
                self.path_value(*edge, path, rho.node(src), j)?
            }
        })
    }

    /// Algorithm: alternate strategy improvement and evaluation until no
    /// variable can be improved.
    pub fn run(&mut self, opts: &RunOptions) -> Result<RunOutcome, EngineError> {
        let started = Instant::now();
        let mut strategy: Strategy = vec![Choice::Bottom; self.sys.num_vars()];
        let mut rho = Bounds::bottom(self.sys);
        let mut trace = Vec::new();
        let mut converged = true;
        loop {
            if opts.max_iters.is_some_and(|cap| self.stats.improvement_steps >= cap) {
                converged = false;
                break;
            }
            self.stats.improvement_steps += 1;
            let improved = if opts.local_opt {
                self.improve_local_opt(&strategy, &rho)?
            } else {
                self.improve(&strategy, &rho)?
            };
            let Some(next) = improved else { break };
            let changed = (0..next.len())
                .filter(|&x| next[x] != strategy[x])
                .map(|x| (x, next[x].clone()))
                .collect();
            strategy = next;
            rho = self.evaluate(&strategy, &rho)?;
            self.stats.wall_ms = started.elapsed().as_millis();
            trace.push(TraceRecord {
                step: self.stats.improvement_steps,
                changed,
                bounds: rho.clone(),
                stats: self.stats.clone(),
            });
        }
        self.stats.wall_ms = started.elapsed().as_millis();
        Ok(RunOutcome {
            bounds: rho,
            strategy,
            stats: self.stats.clone(),
            converged,
            trace,
        })
    }
}

/// `max T_j·x'` subject to `T·x ≤ src` (finite rows) and a sequential statement.
pub(crate) fn path_lp(template: &Template, stmt: &Formula, src: &[ExtRat], j: usize) -> LpProblem {
    use crate::formula::{Atom, Var};
    let mut atoms: Vec<Atom> = Vec::new();
    for (i, d) in src.iter().enumerate() {
        if let ExtRat::Finite(q) = d {
            atoms.push(Atom::le(template.row_expr(i, Var::Pre), q.clone()));
        }
    }
    atoms.extend(stmt.atoms().into_iter().cloned());
    let mut enc = crate::smt::conjunction_lp(&atoms);
    let objective = template
        .row_expr(j, Var::Post)
        .coeffs()
        .iter()
        .map(|(v, c)| {
            let lv = match enc.vars.get(v) {
                Some(lv) => *lv,
                None => {
                    let lv = enc.lp.add_var(format!("{v:?}"));
                    enc.vars.insert(v.clone(), lv);
                    lv
                }
            };
            (lv, c.clone())
        })
        .collect();
    enc.lp.set_objective(objective);
    enc.lp
}

/// Runs the iteration with default options.
pub fn run<B: SmtBackend>(sys: &EquationSystem, smt: B, opts: &RunOptions) -> Result<RunOutcome, EngineError> {
    Engine::new(sys, smt).run(opts)
}
