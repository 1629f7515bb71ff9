//! Strategy improvement by satisfiability queries.

use super::{Bounds, Choice, Engine, EngineError, Strategy};
use crate::formula::{build_psi, PathChoice};
use crate::numeric::ExtRat;
use crate::smt::{SmtBackend, SmtResult};

impl<B: SmtBackend> Engine<'_, B> {
    /// Asks whether some path of `edge` lifts row `j` above `c`; returns the path.
    fn improving_path(
        &mut self,
        edge: usize,
        j: usize,
        rho: &Bounds,
        c: &ExtRat,
    ) -> Result<Option<PathChoice>, EngineError> {
        let e = self.sys.cfg().edge(edge);
        let src = rho.node(e.src);
        let psi = build_psi(&e.stmt, src, self.sys.template(), j, c)?;
        self.stats.smt_queries += 1;
        Ok(match self.smt.check(&psi)? {
            SmtResult::Unsat => None,
            SmtResult::Sat { choice, .. } => {
                let own = e.stmt.selectors();
                Some(choice.iter().filter(|(s, _)| own.contains(s)).collect())
            }
        })
    }

    /// In-edges of the variable's node whose source has no `-inf` row.
    fn live_in_edges(&self, x: usize, rho: &Bounds) -> Vec<usize> {
        let cfg = self.sys.cfg();
        cfg.in_edges(self.sys.node_of(x))
            .filter(|&e| !rho.node(cfg.edge(e).src).contains(&ExtRat::NegInf))
            .collect()
    }

    /// A strategy that is strictly better at `rho` on every variable that can
    /// be improved, or `None` if `rho` already solves the system.
    ///
    /// Each improvable variable takes the first incoming edge, in declaration
    /// order, with a path that beats its current value.
    pub fn improve(&mut self, strategy: &Strategy, rho: &Bounds) -> Result<Option<Strategy>, EngineError> {
        let mut next = strategy.clone();
        let mut changed = false;
        for x in 0..self.sys.num_vars() {
            let current = rho.get(x).clone();
            if current == ExtRat::PosInf {
                continue;
            }
            if self.sys.is_start_var(x) {
                next[x] = Choice::TopConst;
                changed = true;
                continue;
            }
            let j = self.sys.row_of(x);
            for edge in self.live_in_edges(x, rho) {
                if let Some(path) = self.improving_path(edge, j, rho, &current)? {
                    next[x] = Choice::Path { edge, path };
                    changed = true;
                    break;
                }
            }
        }
        Ok(changed.then_some(next))
    }

    /// Like [`Engine::improve`], but each changed variable gets a choice whose
    /// value at `rho` no other choice exceeds. The threshold is raised to the
    /// value of each path found until no path beats it.
    pub fn improve_local_opt(&mut self, strategy: &Strategy, rho: &Bounds) -> Result<Option<Strategy>, EngineError> {
        let mut next = strategy.clone();
        let mut changed = false;
        for x in 0..self.sys.num_vars() {
            let current = rho.get(x).clone();
            if current == ExtRat::PosInf {
                continue;
            }
            if self.sys.is_start_var(x) {
                next[x] = Choice::TopConst;
                changed = true;
                continue;
            }
            let j = self.sys.row_of(x);
            let mut best: Option<Choice> = None;
            let mut threshold = current;
            'edges: for edge in self.live_in_edges(x, rho) {
                while let Some(path) = self.improving_path(edge, j, rho, &threshold)? {
                    let choice = Choice::Path { edge, path };
                    let value = self.choice_value(x, &choice, rho)?;
                    if value <= threshold {
                        return Err(EngineError::Internal(format!(
                            "improving path for {} has value {value}, not above {threshold}",
                            self.sys.var_name(x)
                        )));
                    }
                    best = Some(choice);
                    threshold = value;
                    if threshold == ExtRat::PosInf {
                        break 'edges;
                    }
                }
            }
            if let Some(choice) = best {
                next[x] = choice;
                changed = true;
            }
        }
        Ok(changed.then_some(next))
    }
}
