//! From a parsed program to bounds: pruning, compression, iteration and an
//! optional certificate.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::cfg::CfgError;
use crate::engine::{check_post_fixpoint, CheckOutcome, Engine, EngineError, EquationSystem, RunOptions, RunOutcome};
use crate::program::Program;
use crate::smt::SmtBackend;
use crate::template::TemplateError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Cfg(#[from] CfgError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Merge paths onto the start node and a cut set before iterating.
    pub compress: bool,
    /// Certify the result afterwards.
    pub check: bool,
    pub run: RunOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            compress: true,
            check: false,
            run: RunOptions::default(),
        }
    }
}

#[derive(Debug)]
pub struct Analysis {
    /// The system that was solved; its graph may be compressed.
    pub system: EquationSystem,
    pub outcome: RunOutcome,
    pub check: Option<CheckOutcome>,
    pub warnings: Vec<String>,
}

impl Analysis {
    pub fn certified(&self) -> Option<bool> {
        self.check.as_ref().map(|c| *c == CheckOutcome::Verified)
    }
}

/// Builds the equation system the analysis solves.
pub fn prepare(program: &Program, compress: bool) -> Result<(EquationSystem, Vec<String>), AnalysisError> {
    let template = program.template()?;
    let mut warnings = program.lints();
    let (cfg, dropped) = program.cfg()?.drop_unreachable();
    for name in &dropped {
        warnings.push(format!("node `{name}` is unreachable from the start and was dropped"));
    }
    let cfg = if compress {
        let cut: BTreeSet<usize> = match &program.cutset {
            Some(names) => {
                let mut cut = BTreeSet::new();
                for &i in names {
                    let name = &program.nodes[i];
                    match cfg.nodes().iter().position(|n| n == name) {
                        Some(j) => {
                            cut.insert(j);
                        }
                        None => warnings.push(format!("cut set node `{name}` is unreachable and was ignored")),
                    }
                }
                cut
            }
            None => cfg.feedback_vertex_set(),
        };
        cfg.compress(&cut)?
    } else {
        cfg
    };
    Ok((EquationSystem::new(cfg, template), warnings))
}

pub fn analyze<B: SmtBackend>(program: &Program, smt: B, opts: &AnalysisOptions) -> Result<Analysis, AnalysisError> {
    let (system, warnings) = prepare(program, opts.compress)?;
    let mut engine = Engine::new(&system, smt);
    let outcome = engine.run(&opts.run)?;
    let mut smt = engine.into_backend();
    let check = if opts.check {
        Some(check_post_fixpoint(&system, &outcome.bounds, &mut smt)?)
    } else {
        None
    };
    Ok(Analysis {
        system,
        outcome,
        check,
        warnings,
    })
}
