//! SMT-LIB2 client for an external solver process.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::process::{Command, Stdio};

use thiserror::Error;

use super::{conjunction_model, validate_sat, SmtBackend, SmtError, SmtProblem, SmtResult};
use crate::formula::{Atom, Formula, PathChoice, SelectorId, Var};
use crate::numeric::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmtLibError {
    #[error("unbalanced parentheses in solver output")]
    Unbalanced,
    #[error("unterminated string or quoted symbol in solver output")]
    Unterminated,
    #[error("solver output has no sat/unsat answer")]
    NoStatus,
    #[error("unexpected solver answer `{0}`")]
    BadStatus(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmtStatus {
    Sat,
    Unsat,
    Unknown,
}

/// Parsed solver output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtResponse {
    pub status: SmtStatus,
    /// `(get-assignment)` entries.
    pub assignment: BTreeMap<String, bool>,
    /// `(get-value ...)` entries that denote rationals.
    pub values: BTreeMap<String, Rat>,
    /// Messages of `(error ...)` responses.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Result<Vec<Sexp>, SmtLibError> {
    let chars: Vec<char> = text.chars().collect();
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '(' => {
                stack.push(Vec::new());
                i += 1;
            }
            ')' => {
                let done = stack.pop().ok_or(SmtLibError::Unbalanced)?;
                stack.last_mut().ok_or(SmtLibError::Unbalanced)?.push(Sexp::List(done));
                i += 1;
            }
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(SmtLibError::Unterminated),
                        Some('"') if chars.get(i + 1) == Some(&'"') => {
                            s.push('"');
                            i += 2;
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some(ch) => {
                            s.push(*ch);
                            i += 1;
                        }
                    }
                }
                stack.last_mut().ok_or(SmtLibError::Unbalanced)?.push(Sexp::Str(s));
            }
            '|' => {
                let end = chars[i + 1..]
                    .iter()
                    .position(|ch| *ch == '|')
                    .ok_or(SmtLibError::Unterminated)?;
                let s: String = chars[i + 1..i + 1 + end].iter().collect();
                stack.last_mut().ok_or(SmtLibError::Unbalanced)?.push(Sexp::Atom(s));
                i += end + 2;
            }
            c if c.is_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !"()\";|".contains(chars[i]) {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                stack.last_mut().ok_or(SmtLibError::Unbalanced)?.push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err(SmtLibError::Unbalanced);
    }
    Ok(stack.pop().unwrap_or_default())
}

fn rational_value(e: &Sexp) -> Option<Rat> {
    match e {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => rational_value(x).map(|q| -q),
            [Sexp::Atom(op), x, y] if op == "/" => {
                let d = rational_value(y)?;
                if d.is_zero() {
                    None
                } else {
                    Some(rational_value(x)? / d)
                }
            }
            _ => None,
        },
        Sexp::Str(_) => None,
    }
}

/// Parses the output of a `check-sat`, `get-assignment`, `get-value` script.
pub fn parse_response(text: &str) -> Result<SmtResponse, SmtLibError> {
    let items = tokenize(text)?;
    let mut status = None;
    let mut resp = SmtResponse {
        status: SmtStatus::Unknown,
        assignment: BTreeMap::new(),
        values: BTreeMap::new(),
        errors: Vec::new(),
    };
    for item in &items {
        match item {
            Sexp::Atom(a) if status.is_none() => {
                status = Some(match a.as_str() {
                    "sat" => SmtStatus::Sat,
                    "unsat" => SmtStatus::Unsat,
                    "unknown" => SmtStatus::Unknown,
                    "success" => continue,
                    other => return Err(SmtLibError::BadStatus(other.to_string())),
                });
            }
            Sexp::List(l) => match l.as_slice() {
                [Sexp::Atom(head), rest @ ..] if head == "error" => {
                    let msg = rest
                        .iter()
                        .map(|r| match r {
                            Sexp::Str(s) | Sexp::Atom(s) => s.clone(),
                            Sexp::List(_) => "(...)".to_string(),
                        })
                        .collect::<Vec<_>>()
                        .join(" ");
                    resp.errors.push(msg);
                }
                pairs => {
                    for p in pairs {
                        let Sexp::List(kv) = p else { continue };
                        let [Sexp::Atom(name), value] = kv.as_slice() else {
                            continue;
                        };
                        match value {
                            Sexp::Atom(b) if b == "true" => {
                                resp.assignment.insert(name.clone(), true);
                            }
                            Sexp::Atom(b) if b == "false" => {
                                resp.assignment.insert(name.clone(), false);
                            }
                            other => {
                                if let Some(q) = rational_value(other) {
                                    resp.values.insert(name.clone(), q);
                                }
                            }
                        }
                    }
                }
            },
            _ => {}
        }
    }
    resp.status = status.ok_or(SmtLibError::NoStatus)?;
    Ok(resp)
}

fn numeral(q: &Rat) -> String {
    let mag = q.abs();
    let body = if mag.is_integer() {
        format!("{}.0", mag.numer())
    } else {
        format!("(/ {}.0 {}.0)", mag.numer(), mag.denom())
    };
    if q.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

struct Names {
    reals: BTreeMap<Var, String>,
}

fn real_name(i: usize) -> String {
    format!("r{i}")
}

fn selector_flag(s: SelectorId) -> String {
    format!("a{}", s.0)
}

fn selector_label(s: SelectorId) -> String {
    format!("s{}", s.0)
}

fn write_atom(out: &mut String, a: &Atom, names: &Names) {
    let rel = if a.is_strict() { "<" } else { "<=" };
    let terms: Vec<String> = a
        .coeffs()
        .iter()
        .map(|(v, c)| format!("(* {} {})", numeral(c), names.reals[v]))
        .collect();
    let lhs = match terms.len() {
        0 => "0.0".to_string(),
        1 => terms[0].clone(),
        _ => format!("(+ {})", terms.join(" ")),
    };
    let _ = write!(out, "({rel} {lhs} {})", numeral(&a.rhs));
}

fn write_formula(out: &mut String, f: &Formula, names: &Names) {
    match f {
        Formula::Atom(a) => write_atom(out, a, names),
        Formula::And(cs) if cs.is_empty() => out.push_str("true"),
        Formula::And(cs) => {
            out.push_str("(and");
            for c in cs {
                out.push(' ');
                write_formula(out, c, names);
            }
            out.push(')');
        }
        Formula::Or(l, r, s) => {
            let _ = write!(
                out,
                "(or (and (not (! {} :named {})) ",
                selector_flag(*s),
                selector_label(*s)
            );
            write_formula(out, l, names);
            let _ = write!(out, ") (and {} ", selector_flag(*s));
            write_formula(out, r, names);
            out.push_str("))");
        }
    }
}

/// The SMT-LIB2 script for a problem, and the symbol chosen for each real variable.
pub fn write_script(problem: &SmtProblem) -> (String, BTreeMap<Var, String>) {
    let reals: BTreeMap<Var, String> = problem
        .formula
        .vars()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, real_name(i)))
        .collect();
    let names = Names { reals };
    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n");
    out.push_str("(set-option :produce-assignments true)\n");
    out.push_str("(set-logic QF_LRA)\n");
    for s in problem.formula.selectors() {
        let _ = writeln!(out, "(declare-fun {} () Bool)", selector_flag(s));
    }
    for name in names.reals.values() {
        let _ = writeln!(out, "(declare-fun {name} () Real)");
    }
    out.push_str("(assert ");
    write_formula(&mut out, &problem.formula, &names);
    out.push_str(")\n(check-sat)\n(get-assignment)\n");
    if !names.reals.is_empty() {
        let list: Vec<&str> = names.reals.values().map(String::as_str).collect();
        let _ = writeln!(out, "(get-value ({}))", list.join(" "));
    }
    out.push_str("(exit)\n");
    (out, names.reals)
}

/// Picks disjunction sides that hold at `value`, preferring `hint`.
fn choose_sides(
    f: &Formula,
    value: &impl Fn(&Var) -> Rat,
    hint: &BTreeMap<String, bool>,
    choice: &mut PathChoice,
) -> bool {
    match f {
        Formula::Atom(a) => a.holds(value),
        Formula::And(cs) => cs.iter().all(|c| choose_sides(c, value, hint, choice)),
        Formula::Or(l, r, s) => {
            let first = hint.get(&selector_label(*s)).copied().unwrap_or(false);
            for side in [first, !first] {
                let mut attempt = choice.clone();
                attempt.set(*s, side);
                let branch = if side { r } else { l };
                if choose_sides(branch, value, hint, &mut attempt) {
                    *choice = attempt;
                    return true;
                }
            }
            false
        }
    }
}

/// Runs `sh -c <command>` with the script on standard input.
#[derive(Debug, Clone)]
pub struct SmtLibSolver {
    command: String,
}

impl SmtLibSolver {
    pub const DEFAULT_COMMAND: &'static str = "z3 -in -smt2";

    pub fn new(command: impl Into<String>) -> SmtLibSolver {
        SmtLibSolver {
            command: command.into(),
        }
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn run(&self, script: &str) -> Result<String, SmtError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SmtError::Backend(format!("cannot start `{}`: {e}", self.command)))?;
        {
            let mut stdin = child
                .stdin
                .take()
                .ok_or_else(|| SmtError::Backend("solver stdin unavailable".into()))?;
            // A solver that exits early closes the pipe; its output explains why.
            let _ = stdin.write_all(script.as_bytes());
        }
        let out = child
            .wait_with_output()
            .map_err(|e| SmtError::Backend(format!("waiting for `{}`: {e}", self.command)))?;
        let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
        if stdout.trim().is_empty() {
            return Err(SmtError::Backend(format!(
                "`{}` produced no output ({}): {}",
                self.command,
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(stdout)
    }
}

impl SmtBackend for SmtLibSolver {
    fn check(&mut self, problem: &SmtProblem) -> Result<SmtResult, SmtError> {
        let (script, reals) = write_script(problem);
        let stdout = self.run(&script)?;
        let resp = parse_response(&stdout)?;
        match resp.status {
            SmtStatus::Unsat => return Ok(SmtResult::Unsat),
            SmtStatus::Unknown => return Err(SmtError::Backend("solver answered unknown".into())),
            SmtStatus::Sat => {}
        }
        let named: BTreeMap<Var, Rat> = reals
            .iter()
            .filter_map(|(v, n)| resp.values.get(n).map(|q| (v.clone(), q.clone())))
            .collect();
        if named.len() == reals.len() {
            let value = |v: &Var| named.get(v).cloned().unwrap_or_else(Rat::zero);
            let mut choice = PathChoice::new();
            if choose_sides(&problem.formula, &value, &resp.assignment, &mut choice) {
                return Ok(SmtResult::Sat { choice, model: named });
            }
            return Err(SmtError::Backend("solver model does not satisfy the query".into()));
        }
        // Without usable values, follow the reported selectors and solve the path exactly.
        let choice: PathChoice = problem
            .formula
            .selectors()
            .into_iter()
            .filter_map(|s| resp.assignment.get(&selector_label(s)).map(|b| (s, *b)))
            .collect();
        let path = problem
            .formula
            .select_path(&choice)
            .map_err(|e| SmtError::Backend(format!("incomplete solver assignment: {e}")))?;
        let mut model = conjunction_model(path.atoms())
            .ok_or_else(|| SmtError::Backend("solver reported an infeasible path".into()))?;
        for v in reals.keys() {
            model.entry(v.clone()).or_insert_with(Rat::zero);
        }
        if !validate_sat(problem, &choice, &model) {
            return Err(SmtError::Backend("solver model does not satisfy the query".into()));
        }
        Ok(SmtResult::Sat { choice, model })
    }
}
