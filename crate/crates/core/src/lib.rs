//! Least inductive invariants in template linear constraint domains,
//! computed by max-strategy iteration.

pub mod analysis;
pub mod cfg;
pub mod engine;
pub mod formula;
pub mod lp;
pub mod numeric;
pub mod program;
pub mod report;
pub mod smt;
pub mod template;
