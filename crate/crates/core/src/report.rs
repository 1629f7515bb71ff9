//! Text and JSON renderings of analysis results.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::analysis::Analysis;
use crate::engine::{Bounds, CheckOutcome, EquationSystem, Stats, TraceRecord};

fn bounds_json(sys: &EquationSystem, bounds: &Bounds) -> Value {
    let t = sys.template();
    let mut nodes = Map::new();
    for (u, name) in sys.cfg().nodes().iter().enumerate() {
        let mut rows = Map::new();
        for (j, label) in t.labels().iter().enumerate() {
            rows.insert(label.clone(), Value::String(bounds.get(sys.var(u, j)).to_string()));
        }
        nodes.insert(name.clone(), Value::Object(rows));
    }
    Value::Object(nodes)
}

fn stats_json(stats: &Stats) -> Value {
    json!({
        "improvement_steps": stats.improvement_steps,
        "smt_queries": stats.smt_queries,
        "lp_solves": stats.lp_solves,
        "wall_ms": stats.wall_ms as u64,
    })
}

/// `{"nodes": {...}, "stats": {...}, "certified": bool|null}`.
pub fn to_json(a: &Analysis) -> Value {
    json!({
        "nodes": bounds_json(&a.system, &a.outcome.bounds),
        "stats": stats_json(&a.outcome.stats),
        "certified": a.certified(),
    })
}

/// One line per node and row, labels right-aligned.
pub fn bounds_text(sys: &EquationSystem, bounds: &Bounds) -> String {
    let t = sys.template();
    let width = t.labels().iter().map(|l| l.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (u, name) in sys.cfg().nodes().iter().enumerate() {
        let _ = writeln!(out, "node {name}");
        for (j, label) in t.labels().iter().enumerate() {
            let _ = writeln!(out, "  {label:>width$} <= {}", bounds.get(sys.var(u, j)));
        }
    }
    out
}

pub fn stats_text(stats: &Stats) -> String {
    format!(
        "improvement steps: {}\nsmt queries: {}\nlp solves: {}\nwall time: {} ms\n",
        stats.improvement_steps, stats.smt_queries, stats.lp_solves, stats.wall_ms
    )
}

pub fn check_text(sys: &EquationSystem, check: &CheckOutcome) -> String {
    let cfg = sys.cfg();
    let t = sys.template();
    let point = |v: &[crate::numeric::Rat]| {
        let parts: Vec<String> = t.vars().iter().zip(v).map(|(n, q)| format!("{n} = {q}")).collect();
        format!("({})", parts.join(", "))
    };
    match check {
        CheckOutcome::Verified => "certified: yes\n".to_string(),
        CheckOutcome::StartNotTop { row } => {
            format!("certified: no (start row `{}` is bounded)\n", t.label(*row))
        }
        CheckOutcome::Counterexample { edge, row, pre, post } => {
            let e = cfg.edge(*edge);
            format!(
                "certified: no (edge {} -> {} leaves row `{}`: {} -> {})\n",
                cfg.node_name(e.src),
                cfg.node_name(e.dst),
                t.label(*row),
                point(pre),
                point(post)
            )
        }
    }
}

/// One JSON object per iteration.
pub fn trace_json(sys: &EquationSystem, record: &TraceRecord) -> Value {
    let changed: Vec<Value> = record
        .changed
        .iter()
        .map(|(x, c)| json!({"var": sys.var_name(*x), "choice": c.to_string()}))
        .collect();
    json!({
        "step": record.step,
        "changed": changed,
        "bounds": bounds_json(sys, &record.bounds),
        "stats": stats_json(&record.stats),
    })
}
