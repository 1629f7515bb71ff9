//! Precedence-climbing parser for the statement grammar.
//!
//! Operators from loosest to tightest: `|`, `&`, comparisons, `+ -`, `* /`,
//! unary minus. Terms and formulas are combined as soon as both operands are
//! known, so long operator chains never build a deep intermediate tree.

use std::fmt;

use thiserror::Error;

use super::{Atom, Formula, LinExpr, Rel, Var};
use crate::numeric::Rat;

/// Parenthesis, unary minus and disjunction nesting limit.
const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rat),
    Ident(String, bool),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    And,
    Or,
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    Ne,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(q) => write!(f, "number `{q}`"),
            Tok::Ident(n, p) => write!(f, "`{n}{}`", if *p { "'" } else { "" }),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::And => f.write_str("`&`"),
            Tok::Or => f.write_str("`|`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Ne => f.write_str("`!=`"),
            Tok::End => f.write_str("end of statement"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(line: usize, col: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        col,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut advance = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i);
            continue;
        }
        let next = chars.get(i + 1).copied();
        let push = |tok: Tok, out: &mut Vec<Token>| out.push(Token { tok, line: tl, col: tc });
        match c {
            '+' => {
                push(Tok::Plus, &mut out);
                advance(1, &mut i);
            }
            '-' => {
                push(Tok::Minus, &mut out);
                advance(1, &mut i);
            }
            '*' => {
                push(Tok::Star, &mut out);
                advance(1, &mut i);
            }
            '/' => {
                push(Tok::Slash, &mut out);
                advance(1, &mut i);
            }
            '(' => {
                push(Tok::LParen, &mut out);
                advance(1, &mut i);
            }
            ')' => {
                push(Tok::RParen, &mut out);
                advance(1, &mut i);
            }
            '&' => {
                push(Tok::And, &mut out);
                advance(if next == Some('&') { 2 } else { 1 }, &mut i);
            }
            '|' => {
                push(Tok::Or, &mut out);
                advance(if next == Some('|') { 2 } else { 1 }, &mut i);
            }
            '<' if next == Some('=') => {
                push(Tok::Le, &mut out);
                advance(2, &mut i);
            }
            '<' => {
                push(Tok::Lt, &mut out);
                advance(1, &mut i);
            }
            '>' if next == Some('=') => {
                push(Tok::Ge, &mut out);
                advance(2, &mut i);
            }
            '>' => {
                push(Tok::Gt, &mut out);
                advance(1, &mut i);
            }
            '=' => {
                push(Tok::Eq, &mut out);
                advance(if next == Some('=') { 2 } else { 1 }, &mut i);
            }
            '!' if next == Some('=') => {
                push(Tok::Ne, &mut out);
                advance(2, &mut i);
            }
            '!' | '~' => {
                return Err(err(tl, tc, "negation is not supported in statements"));
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let lit: String = chars[start..i].iter().collect();
                col += i - start;
                let q: Rat = lit
                    .parse()
                    .map_err(|_| err(tl, tc, format!("malformed number `{lit}`")))?;
                push(Tok::Num(q), &mut out);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                col += i - start;
                let primed = chars.get(i) == Some(&'\'');
                if primed {
                    i += 1;
                    col += 1;
                }
                if name == "not" && !primed {
                    return Err(err(tl, tc, "negation is not supported in statements"));
                }
                push(Tok::Ident(name, primed), &mut out);
            }
            other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Token {
        tok: Tok::End,
        line,
        col,
    });
    Ok(out)
}

enum Value {
    Term(LinExpr),
    /// A formula and its disjunction nesting depth.
    Formula(Formula, usize),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Or,
    And,
    Rel(RelOp),
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RelOp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    Ne,
}

impl BinOp {
    fn of(tok: &Tok) -> Option<BinOp> {
        Some(match tok {
            Tok::Or => BinOp::Or,
            Tok::And => BinOp::And,
            Tok::Le => BinOp::Rel(RelOp::Le),
            Tok::Lt => BinOp::Rel(RelOp::Lt),
            Tok::Ge => BinOp::Rel(RelOp::Ge),
            Tok::Gt => BinOp::Rel(RelOp::Gt),
            Tok::Eq => BinOp::Rel(RelOp::Eq),
            Tok::Ne => BinOp::Rel(RelOp::Ne),
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            _ => return None,
        })
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Rel(_) => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    program_vars: &'a [String],
    depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn enter(&mut self, at: &Token) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(err(at.line, at.col, "statement is nested too deeply"));
        }
        Ok(())
    }

    fn resolve(&self, name: &str, primed: bool) -> Var {
        match self.program_vars.iter().position(|v| v == name) {
            Some(i) if primed => Var::Post(i),
            Some(i) => Var::Pre(i),
            None if primed => Var::aux(&format!("{name}'")),
            None => Var::aux(name),
        }
    }

    fn expr(&mut self, min_prec: u8) -> Result<Value, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let at = self.peek().clone();
            let Some(op) = BinOp::of(&at.tok) else { break };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            // All binary operators are left-associative except comparisons,
            // which do not associate at all.
            let rhs = self.expr(prec + 1)?;
            lhs = combine(op, lhs, rhs, &at)?;
            if matches!(op, BinOp::Rel(_)) {
                let next = self.peek();
                if matches!(BinOp::of(&next.tok), Some(BinOp::Rel(_))) {
                    return Err(err(next.line, next.col, "comparisons cannot be chained"));
                }
            }
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Value, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Num(q) => Ok(Value::Term(LinExpr::constant(q))),
            Tok::Ident(ref name, primed) => Ok(Value::Term(LinExpr::var(self.resolve(name, primed)))),
            Tok::Minus => {
                self.enter(&t)?;
                let v = self.expr(6)?;
                self.depth -= 1;
                match v {
                    Value::Term(e) => Ok(Value::Term(e.scaled(&-Rat::one()))),
                    Value::Formula(..) => Err(err(t.line, t.col, "unary minus applied to a formula")),
                }
            }
            Tok::LParen => {
                self.enter(&t)?;
                let v = self.expr(1)?;
                self.depth -= 1;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return Err(err(close.line, close.col, format!("expected `)`, found {}", close.tok)));
                }
                Ok(v)
            }
            other => Err(err(t.line, t.col, format!("expected a term or `(`, found {other}"))),
        }
    }
}

fn combine(op: BinOp, lhs: Value, rhs: Value, at: &Token) -> Result<Value, ParseError> {
    let e = |m: &str| err(at.line, at.col, m.to_string());
    match op {
        BinOp::Or | BinOp::And => {
            let (Value::Formula(l, dl), Value::Formula(r, dr)) = (lhs, rhs) else {
                return Err(e("operands of `&` and `|` must be formulas"));
            };
            if op == BinOp::And {
                return Ok(Value::Formula(Formula::and([l, r]), dl.max(dr)));
            }
            let depth = dl.max(dr) + 1;
            if depth > MAX_DEPTH {
                return Err(e("statement is nested too deeply"));
            }
            Ok(Value::Formula(Formula::or(l, r), depth))
        }
        BinOp::Rel(rel) => {
            let (Value::Term(l), Value::Term(r)) = (lhs, rhs) else {
                return Err(e("comparison operands must be linear terms"));
            };
            let f = match rel {
                RelOp::Le => Atom::new(&l, Rel::Le, &r).into(),
                RelOp::Lt => Atom::new(&l, Rel::Lt, &r).into(),
                RelOp::Ge => Atom::new(&r, Rel::Le, &l).into(),
                RelOp::Gt => Atom::new(&r, Rel::Lt, &l).into(),
                RelOp::Eq => Formula::and([Atom::new(&l, Rel::Le, &r).into(), Atom::new(&r, Rel::Le, &l).into()]),
                RelOp::Ne => {
                    return Ok(Value::Formula(
                        Formula::or(Atom::new(&l, Rel::Lt, &r).into(), Atom::new(&r, Rel::Lt, &l).into()),
                        1,
                    ))
                }
            };
            Ok(Value::Formula(f, 0))
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
            let (Value::Term(l), Value::Term(r)) = (lhs, rhs) else {
                return Err(e("arithmetic operands must be terms"));
            };
            match op {
                BinOp::Add => Ok(Value::Term(l.plus(&r))),
                BinOp::Sub => Ok(Value::Term(l.minus(&r))),
                BinOp::Mul if l.is_constant() => Ok(Value::Term(r.scaled(l.constant_part()))),
                BinOp::Mul if r.is_constant() => Ok(Value::Term(l.scaled(r.constant_part()))),
                BinOp::Mul => Err(e("product of two variables is not linear")),
                _ if !r.is_constant() => Err(e("division by a non-constant term")),
                _ if r.constant_part().is_zero() => Err(e("division by zero")),
                _ => Ok(Value::Term(l.scaled(&r.constant_part().recip()))),
            }
        }
    }
}

/// Parses one statement. Names listed in `program_vars` become pre/post
/// variables; every other identifier is an auxiliary variable.
pub fn parse_statement(text: &str, program_vars: &[String]) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        program_vars,
        depth: 0,
    };
    let v = p.expr(1)?;
    let end = p.peek();
    if end.tok != Tok::End {
        return Err(err(end.line, end.col, format!("unexpected {}", end.tok)));
    }
    match v {
        Value::Formula(f, _) => Ok(f.relabel_selectors()),
        Value::Term(_) => Err(err(1, 1, "statement is a term, not a formula")),
    }
}

/// Parses a linear term such as a template row.
pub fn parse_term(text: &str, program_vars: &[String]) -> Result<LinExpr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        program_vars,
        depth: 0,
    };
    let v = p.expr(4)?;
    let end = p.peek();
    if end.tok != Tok::End {
        return Err(err(end.line, end.col, format!("unexpected {}", end.tok)));
    }
    match v {
        Value::Term(e) => Ok(e),
        Value::Formula(..) => Err(err(1, 1, "expected a term, found a formula")),
    }
}
