//! Program files: variables, a template, nodes and statement-labeled edges.
//!
//! ```text
//! vars x1 x2 ;
//! template interval ;            # or octagon, or { x1; -x1; x1 + x2; }
//! nodes st n1 ;
//! start st ;
//! edge st -> n1 : x1' = 0 ;
//! edge n1 -> n1 : x1 <= 1000 & x2' = -x1 & ... ;
//! cutset n1 ;                    # optional
//! ```
//!
//! `int i ;` marks program variables as integer valued. On an edge written
//! `edge [int] u -> v : ...`, strict atoms over integer variables with integer
//! coefficients are tightened from `a·x < b` to `a·x <= ceil(b) - 1`.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::cfg::{Cfg, CfgError, Edge};
use crate::formula::{parse_statement, parse_term, Atom, Formula, LinExpr, ParseError, Rel, Var};
use crate::numeric::Rat;
use crate::template::{Template, TemplateError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Cfg(#[from] CfgError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplateSpec {
    Interval,
    Octagon,
    Rows(Vec<Vec<Rat>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramEdge {
    pub src: usize,
    pub dst: usize,
    pub stmt: Formula,
    /// Apply the integer tightening of strict atoms.
    pub int_relax: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub vars: Vec<String>,
    pub int_vars: BTreeSet<usize>,
    pub template: TemplateSpec,
    pub nodes: Vec<String>,
    pub start: usize,
    pub edges: Vec<ProgramEdge>,
    pub cutset: Option<BTreeSet<usize>>,
}

struct Scanner {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

fn is_word(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl Scanner {
    fn new(src: &str) -> Scanner {
        Scanner {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn error(&self, message: impl Into<String>) -> ProgramError {
        ProgramError::Syntax {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_blank(&mut self) {
        while let Some(c) = self.peek() {
            if c == '#' {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_blank();
        self.peek().is_none()
    }

    fn word(&mut self) -> Result<String, ProgramError> {
        self.skip_blank();
        let mut w = String::new();
        while let Some(c) = self.peek().filter(|&c| is_word(c)) {
            w.push(c);
            self.bump();
        }
        if w.is_empty() {
            return Err(match self.peek() {
                Some(c) => self.error(format!("expected a name, found `{c}`")),
                None => self.error("expected a name, found end of file"),
            });
        }
        Ok(w)
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_blank();
        let n = s.chars().count();
        if self.chars[self.pos..].iter().take(n).copied().eq(s.chars()) {
            for _ in 0..n {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ProgramError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(match self.peek() {
                Some(c) => self.error(format!("expected `{s}`, found `{c}`")),
                None => self.error(format!("expected `{s}`, found end of file")),
            })
        }
    }

    /// Names up to the next `;`.
    fn names(&mut self) -> Result<Vec<(String, usize, usize)>, ProgramError> {
        let mut out = Vec::new();
        while !self.eat(";") {
            self.skip_blank();
            let (l, c) = (self.line, self.col);
            out.push((self.word()?, l, c));
        }
        Ok(out)
    }

    /// Raw text up to (not including) the next occurrence of `stop`, with its
    /// start position.
    fn text_until(&mut self, stop: char) -> Result<(String, usize, usize), ProgramError> {
        let (l, c) = (self.line, self.col);
        let mut s = String::new();
        loop {
            match self.peek() {
                None => return Err(self.error(format!("missing `{stop}`"))),
                Some(ch) if ch == stop => return Ok((s, l, c)),
                Some('#') => {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                Some(ch) => {
                    s.push(ch);
                    self.bump();
                }
            }
        }
    }
}

/// Shifts an error inside embedded text to file coordinates.
fn relocate(e: ParseError, line: usize, col: usize) -> ProgramError {
    let (l, c) = if e.line == 1 {
        (line, col + e.col - 1)
    } else {
        (line + e.line - 1, e.col)
    };
    ProgramError::Syntax {
        line: l,
        col: c,
        message: e.message,
    }
}

fn lookup(names: &[String], name: &str, what: &str, line: usize, col: usize) -> Result<usize, ProgramError> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| ProgramError::Syntax {
            line,
            col,
            message: format!("unknown {what} `{name}`"),
        })
}

fn once<T>(slot: &Option<T>, what: &str, s: &Scanner) -> Result<(), ProgramError> {
    if slot.is_some() {
        return Err(s.error(format!("duplicate `{what}` directive")));
    }
    Ok(())
}

impl Program {
    pub fn parse(text: &str) -> Result<Program, ProgramError> {
        let mut s = Scanner::new(text);
        let mut vars: Option<Vec<String>> = None;
        let mut int_vars = BTreeSet::new();
        let mut template = None;
        let mut nodes: Option<Vec<String>> = None;
        let mut start = None;
        let mut edges = Vec::new();
        let mut cutset: Option<BTreeSet<usize>> = None;
        while !s.at_end() {
            let (kl, kc) = (s.line, s.col);
            let kw = s.word()?;
            let need = |v: &Option<Vec<String>>, what: &str| {
                v.clone().ok_or_else(|| ProgramError::Syntax {
                    line: kl,
                    col: kc,
                    message: format!("`{kw}` must come after `{what}`"),
                })
            };
            match kw.as_str() {
                "vars" => {
                    once(&vars, "vars", &s)?;
                    let mut vs: Vec<String> = Vec::new();
                    for (name, l, c) in s.names()? {
                        if !name.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
                            return Err(ProgramError::Syntax {
                                line: l,
                                col: c,
                                message: format!("`{name}` is not a valid variable name"),
                            });
                        }
                        if vs.contains(&name) {
                            return Err(ProgramError::Syntax {
                                line: l,
                                col: c,
                                message: format!("variable `{name}` declared twice"),
                            });
                        }
                        vs.push(name);
                    }
                    vars = Some(vs);
                }
                "int" => {
                    let vs = need(&vars, "vars")?;
                    for (name, l, c) in s.names()? {
                        int_vars.insert(lookup(&vs, &name, "variable", l, c)?);
                    }
                }
                "template" => {
                    once(&template, "template", &s)?;
                    let vs = need(&vars, "vars")?;
                    if s.eat("{") {
                        let mut rows = Vec::new();
                        loop {
                            s.skip_blank();
                            if s.eat("}") {
                                break;
                            }
                            let (text, l, c) = s.text_until(';')?;
                            s.expect(";")?;
                            if text.contains('}') {
                                return Err(ProgramError::Syntax {
                                    line: l,
                                    col: c,
                                    message: "missing `;` before `}`".into(),
                                });
                            }
                            rows.push(template_row(&text, &vs).map_err(|e| relocate(e, l, c))?);
                        }
                        s.eat(";");
                        template = Some(TemplateSpec::Rows(rows));
                    } else {
                        let (l, c) = (s.line, s.col);
                        let kind = s.word()?;
                        s.expect(";")?;
                        template = Some(match kind.as_str() {
                            "interval" => TemplateSpec::Interval,
                            "octagon" => TemplateSpec::Octagon,
                            other => {
                                return Err(ProgramError::Syntax {
                                    line: l,
                                    col: c,
                                    message: format!("unknown template `{other}`"),
                                })
                            }
                        });
                    }
                }
                "nodes" => {
                    once(&nodes, "nodes", &s)?;
                    let mut ns: Vec<String> = Vec::new();
                    for (name, l, c) in s.names()? {
                        if ns.contains(&name) {
                            return Err(ProgramError::Syntax {
                                line: l,
                                col: c,
                                message: format!("node `{name}` declared twice"),
                            });
                        }
                        ns.push(name);
                    }
                    nodes = Some(ns);
                }
                "start" => {
                    once(&start, "start", &s)?;
                    let ns = need(&nodes, "nodes")?;
                    s.skip_blank();
                    let (l, c) = (s.line, s.col);
                    let name = s.word()?;
                    start = Some(lookup(&ns, &name, "node", l, c)?);
                    s.expect(";")?;
                }
                "edge" => {
                    let ns = need(&nodes, "nodes")?;
                    let vs = need(&vars, "vars")?;
                    let int_relax = if s.eat("[") {
                        let flag = s.word()?;
                        if flag != "int" {
                            return Err(s.error(format!("unknown edge annotation `{flag}`")));
                        }
                        s.expect("]")?;
                        true
                    } else {
                        false
                    };
                    s.skip_blank();
                    let (l, c) = (s.line, s.col);
                    let src = lookup(&ns, &s.word()?, "node", l, c)?;
                    s.expect("->")?;
                    s.skip_blank();
                    let (l, c) = (s.line, s.col);
                    let dst = lookup(&ns, &s.word()?, "node", l, c)?;
                    s.expect(":")?;
                    let (text, l, c) = s.text_until(';')?;
                    s.expect(";")?;
                    let stmt = parse_statement(&text, &vs).map_err(|e| relocate(e, l, c))?;
                    edges.push(ProgramEdge {
                        src,
                        dst,
                        stmt,
                        int_relax,
                    });
                }
                "cutset" => {
                    once(&cutset, "cutset", &s)?;
                    let ns = need(&nodes, "nodes")?;
                    let mut cut = BTreeSet::new();
                    for (name, l, c) in s.names()? {
                        cut.insert(lookup(&ns, &name, "node", l, c)?);
                    }
                    cutset = Some(cut);
                }
                other => {
                    return Err(ProgramError::Syntax {
                        line: kl,
                        col: kc,
                        message: format!("unknown directive `{other}`"),
                    })
                }
            }
        }
        let missing = |what: &str| ProgramError::Syntax {
            line: s.line,
            col: s.col,
            message: format!("missing `{what}` directive"),
        };
        Ok(Program {
            vars: vars.ok_or_else(|| missing("vars"))?,
            int_vars,
            template: template.ok_or_else(|| missing("template"))?,
            nodes: nodes.ok_or_else(|| missing("nodes"))?,
            start: start.ok_or_else(|| missing("start"))?,
            edges,
            cutset,
        })
    }

    pub fn template(&self) -> Result<Template, TemplateError> {
        match &self.template {
            TemplateSpec::Interval => Template::interval(self.vars.clone()),
            TemplateSpec::Octagon => Template::octagon(self.vars.clone()),
            TemplateSpec::Rows(rows) => Template::new(self.vars.clone(), rows.clone()),
        }
    }

    /// The graph, with integer tightening applied to annotated edges.
    pub fn cfg(&self) -> Result<Cfg, CfgError> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                src: e.src,
                dst: e.dst,
                stmt: if e.int_relax {
                    e.stmt.map_atoms(&|a| tighten(a, &self.int_vars))
                } else {
                    e.stmt.clone()
                },
            })
            .collect();
        Cfg::new(self.nodes.clone(), self.start, edges)
    }

    /// Warnings about likely mistakes that do not prevent analysis.
    pub fn lints(&self) -> Vec<String> {
        let mut out = Vec::new();
        for e in &self.edges {
            let used = e.stmt.vars();
            let free: Vec<String> = (0..self.vars.len())
                .filter(|&i| !used.contains(&Var::Post(i)))
                .map(|i| format!("{}'", self.vars[i]))
                .collect();
            if !free.is_empty() {
                out.push(format!(
                    "edge {} -> {}: {} unconstrained (any value after the transition)",
                    self.nodes[e.src],
                    self.nodes[e.dst],
                    free.join(", ")
                ));
            }
        }
        out
    }
}

fn template_row(text: &str, vars: &[String]) -> Result<Vec<Rat>, ParseError> {
    let e: LinExpr = parse_term(text, vars)?;
    let fail = |m: &str| ParseError {
        line: 1,
        col: 1,
        message: m.to_string(),
    };
    if !e.constant_part().is_zero() {
        return Err(fail("template rows cannot have a constant term"));
    }
    let mut row = vec![Rat::zero(); vars.len()];
    for (v, c) in e.coeffs() {
        match v {
            Var::Pre(i) => row[*i] = c.clone(),
            other => {
                return Err(fail(&format!(
                    "template rows may only use program variables, found `{}`",
                    other.name(vars)
                )))
            }
        }
    }
    Ok(row)
}

/// `a·x < b` to `a·x <= ceil(b) - 1` when every term is an integer variable
/// with an integer coefficient.
fn tighten(a: &Atom, int_vars: &BTreeSet<usize>) -> Atom {
    if !a.is_strict() {
        return a.clone();
    }
    let integral = a.coeffs().iter().all(|(v, c)| {
        c.is_integer()
            && match v {
                Var::Pre(i) | Var::Post(i) => int_vars.contains(i),
                Var::Aux(_) => false,
            }
    });
    if !integral || a.coeffs().is_empty() {
        return a.clone();
    }
    Atom::new(a.lhs(), Rel::Le, &LinExpr::constant(a.rhs.ceil() - Rat::one()))
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars {} ;", self.vars.join(" "))?;
        if !self.int_vars.is_empty() {
            let names: Vec<&str> = self.int_vars.iter().map(|&i| self.vars[i].as_str()).collect();
            writeln!(f, "int {} ;", names.join(" "))?;
        }
        match &self.template {
            TemplateSpec::Interval => writeln!(f, "template interval ;")?,
            TemplateSpec::Octagon => writeln!(f, "template octagon ;")?,
            TemplateSpec::Rows(rows) => {
                let t = Template::new(self.vars.clone(), rows.clone()).map_err(|_| fmt::Error)?;
                let mut line = String::from("template {");
                for l in t.labels() {
                    let _ = write!(line, " {l};");
                }
                writeln!(f, "{line} }}")?;
            }
        }
        writeln!(f, "nodes {} ;", self.nodes.join(" "))?;
        writeln!(f, "start {} ;", self.nodes[self.start])?;
        for e in &self.edges {
            writeln!(
                f,
                "edge {}{} -> {} : {} ;",
                if e.int_relax { "[int] " } else { "" },
                self.nodes[e.src],
                self.nodes[e.dst],
                e.stmt.display(&self.vars)
            )?;
        }
        if let Some(cut) = &self.cutset {
            let names: Vec<&str> = cut.iter().map(|&i| self.nodes[i].as_str()).collect();
            writeln!(f, "cutset {} ;", names.join(" "))?;
        }
        Ok(())
    }
}

/// The program `G_n`: one loop whose body picks, bit by bit, a binary
/// decomposition of `x1`, and whose analysis takes `2^n + 3` improvement steps.
pub fn gen_expo(n: usize) -> Option<String> {
    if n == 0 {
        return None;
    }
    let mut out = String::new();
    let _ = writeln!(out, "# exponential family, n = {n}");
    out.push_str("vars x1 ;\ntemplate { x1; }\nnodes st 1 ;\nstart st ;\n");
    out.push_str("edge st -> 1 : x1' = 0 ;\n");
    out.push_str("edge 1 -> 1 :\n  y1 = 1");
    for k in 2..=n {
        let _ = write!(out, " & y{k} = 2*y{}", k - 1);
    }
    let _ = writeln!(out, " & z{n} = x1");
    for k in (1..=n).rev() {
        let _ = writeln!(
            out,
            "  & (z{k} >= y{k} & z{p} = z{k} - y{k} | z{k} <= y{k} - 1 & z{p} = z{k})",
            p = k - 1
        );
    }
    out.push_str("  & x1' = x1 + 1 ;\n");
    Some(out)
}
