//! Linear temporal logic over event-labelled state graphs.

pub mod buchi;
pub mod check;

use std::fmt;

use serde::Serialize;

use crate::error::ParseError;
use crate::model::ast::Expr;
use crate::model::parser::parse_expr_str;

pub use buchi::{to_buchi, Buchi};
pub use check::{check_kripke, check_ltl, validate, Kripke, Lasso, LassoEdges, LtlError, LtlVerdict};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Atom {
    /// `{expr}`: a predicate on the current state.
    Pred(Expr),
    /// `e(ev)`: some binding of the event is enabled.
    Enabled(String),
    /// `ev` or `[ev]`: the next transition is the event.
    Executed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Ltl {
    True,
    False,
    Atom(Atom),
    Not(Box<Ltl>),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Implies(Box<Ltl>, Box<Ltl>),
    X(Box<Ltl>),
    G(Box<Ltl>),
    F(Box<Ltl>),
    U(Box<Ltl>, Box<Ltl>),
    R(Box<Ltl>, Box<Ltl>),
    /// `[ev] φ`: whenever `ev` is taken, φ holds from that transition on.
    After(String, Box<Ltl>),
}

use Ltl::*;

fn b(f: Ltl) -> Box<Ltl> {
    Box::new(f)
}

impl Ltl {
    pub fn pred(e: Expr) -> Ltl {
        Atom(Atom::Pred(e))
    }

    pub fn executed(ev: &str) -> Ltl {
        Atom(Atom::Executed(ev.to_string()))
    }

    pub fn enabled(ev: &str) -> Ltl {
        Atom(Atom::Enabled(ev.to_string()))
    }

    pub fn not(f: Ltl) -> Ltl {
        Not(b(f))
    }

    pub fn and(l: Ltl, r: Ltl) -> Ltl {
        And(b(l), b(r))
    }

    pub fn or(l: Ltl, r: Ltl) -> Ltl {
        Or(b(l), b(r))
    }

    pub fn implies(l: Ltl, r: Ltl) -> Ltl {
        Implies(b(l), b(r))
    }

    pub fn until(l: Ltl, r: Ltl) -> Ltl {
        U(b(l), b(r))
    }

    pub fn release(l: Ltl, r: Ltl) -> Ltl {
        R(b(l), b(r))
    }

    pub fn next(f: Ltl) -> Ltl {
        X(b(f))
    }

    pub fn globally(f: Ltl) -> Ltl {
        G(b(f))
    }

    pub fn finally(f: Ltl) -> Ltl {
        F(b(f))
    }

    pub fn for_each_atom<'a>(&'a self, f: &mut dyn FnMut(&'a Atom)) {
        match self {
            True | False => {}
            Atom(a) => f(a),
            Not(x) | X(x) | G(x) | F(x) | After(_, x) => x.for_each_atom(f),
            And(l, r) | Or(l, r) | Implies(l, r) | U(l, r) | R(l, r) => {
                l.for_each_atom(f);
                r.for_each_atom(f);
            }
        }
    }

    /// Event names mentioned anywhere, including bracket anchors.
    pub fn events(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_events(&mut out);
        out
    }

    fn collect_events<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            True | False => {}
            Atom(Atom::Pred(_)) => {}
            Atom(Atom::Enabled(e) | Atom::Executed(e)) => out.push(e),
            Not(x) | X(x) | G(x) | F(x) => x.collect_events(out),
            After(ev, x) => {
                out.push(ev);
                x.collect_events(out)
            }
            And(l, r) | Or(l, r) | Implies(l, r) | U(l, r) | R(l, r) => {
                l.collect_events(out);
                r.collect_events(out);
            }
        }
    }

    /// Nesting depth of temporal operators.
    pub fn temporal_depth(&self) -> usize {
        match self {
            True | False | Atom(_) => 0,
            Not(x) => x.temporal_depth(),
            X(x) | G(x) | F(x) | After(_, x) => 1 + x.temporal_depth(),
            And(l, r) | Or(l, r) | Implies(l, r) => l.temporal_depth().max(r.temporal_depth()),
            U(l, r) | R(l, r) => 1 + l.temporal_depth().max(r.temporal_depth()),
        }
    }
}

/// Negation normal form: negation only on atoms, no implication, and
/// `F`, `G` and `[ev]` rewritten with `U` and `R`.
pub fn normalize(f: &Ltl) -> Ltl {
    nnf(f, false)
}

fn nnf(f: &Ltl, neg: bool) -> Ltl {
    match f {
        True if neg => False,
        False if neg => True,
        True | False => f.clone(),
        Atom(_) if neg => Not(b(f.clone())),
        Atom(_) => f.clone(),
        Not(x) => nnf(x, !neg),
        And(l, r) if neg => Or(b(nnf(l, true)), b(nnf(r, true))),
        And(l, r) => And(b(nnf(l, false)), b(nnf(r, false))),
        Or(l, r) if neg => And(b(nnf(l, true)), b(nnf(r, true))),
        Or(l, r) => Or(b(nnf(l, false)), b(nnf(r, false))),
        Implies(l, r) => nnf(&Ltl::or(Ltl::not((**l).clone()), (**r).clone()), neg),
        X(x) => X(b(nnf(x, neg))),
        G(x) if neg => U(b(True), b(nnf(x, true))),
        G(x) => R(b(False), b(nnf(x, false))),
        F(x) if neg => R(b(False), b(nnf(x, true))),
        F(x) => U(b(True), b(nnf(x, false))),
        U(l, r) if neg => R(b(nnf(l, true)), b(nnf(r, true))),
        U(l, r) => U(b(nnf(l, false)), b(nnf(r, false))),
        R(l, r) if neg => U(b(nnf(l, true)), b(nnf(r, true))),
        R(l, r) => R(b(nnf(l, false)), b(nnf(r, false))),
        After(ev, x) => nnf(&desugar_after(ev, x), neg),
    }
}

/// `[ev] φ` as `G(ev ⇒ φ)`.
pub fn desugar_after(ev: &str, body: &Ltl) -> Ltl {
    Ltl::globally(Ltl::implies(Ltl::executed(ev), body.clone()))
}

pub fn is_nnf(f: &Ltl) -> bool {
    match f {
        True | False | Atom(_) => true,
        Not(x) => matches!(**x, Atom(_)),
        And(l, r) | Or(l, r) | U(l, r) | R(l, r) => is_nnf(l) && is_nnf(r),
        X(x) => is_nnf(x),
        Implies(..) | G(_) | F(_) | After(..) => false,
    }
}

const KEYWORDS: &[&str] = &["not", "and", "or", "X", "G", "F", "U", "R", "true", "false", "TRUE", "FALSE"];

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Pred(e) => write!(f, "{{{e}}}"),
            Atom::Enabled(ev) => write!(f, "e({ev})"),
            Atom::Executed(ev) if KEYWORDS.contains(&ev.as_str()) || ev == "e" => write!(f, "[{ev}]"),
            Atom::Executed(ev) => write!(f, "{ev}"),
        }
    }
}

impl fmt::Display for Ltl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Atom(a) => write!(f, "{a}"),
            Not(x) => write!(f, "not({x})"),
            X(x) => write!(f, "X({x})"),
            G(x) => write!(f, "G({x})"),
            F(x) => write!(f, "F({x})"),
            After(ev, x) => write!(f, "[{ev}] ({x})"),
            And(l, r) => write!(f, "({l} and {r})"),
            Or(l, r) => write!(f, "({l} or {r})"),
            Implies(l, r) => write!(f, "({l} => {r})"),
            U(l, r) => write!(f, "({l} U {r})"),
            R(l, r) => write!(f, "({l} R {r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Pred(Expr),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Implies,
    And,
    Or,
    Not,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn err(text: &str, offset: usize, msg: impl Into<String>) -> ParseError {
    let col = text[..offset.min(text.len())].chars().count() as u32 + 1;
    ParseError::new("<ltl>", 1, col, msg)
}

impl Lexer {
    fn run(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { toks: Vec::new() };
        let mut chars = text.char_indices().peekable();
        while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
                continue;
            }
            let rest = &text[i..];
            let sym = [
                ("=>", Tok::Implies),
                ("->", Tok::Implies),
                ("⇒", Tok::Implies),
                ("→", Tok::Implies),
                ("&&", Tok::And),
                ("&", Tok::And),
                ("∧", Tok::And),
                ("||", Tok::Or),
                ("|", Tok::Or),
                ("∨", Tok::Or),
                ("!", Tok::Not),
                ("¬", Tok::Not),
                ("(", Tok::LParen),
                (")", Tok::RParen),
                ("[", Tok::LBracket),
                ("]", Tok::RBracket),
            ]
            .into_iter()
            .find(|(s, _)| rest.starts_with(s));
            if let Some((s, t)) = sym {
                lx.toks.push((t, i));
                for _ in 0..s.chars().count() {
                    chars.next();
                }
                continue;
            }
            if c == '{' {
                let mut depth = 0usize;
                let mut end = None;
                for (j, d) in rest.char_indices() {
                    match d {
                        '{' => depth += 1,
                        '}' => {
                            depth -= 1;
                            if depth == 0 {
                                end = Some(j);
                                break;
                            }
                        }
                        _ => {}
                    }
                }
                let end = end.ok_or_else(|| err(text, i, "unterminated `{`"))?;
                let inner = &rest[1..end];
                let expr = parse_expr_str("<ltl>", inner).map_err(|e| {
                    let col = text[..i + 1].chars().count() as u32 + e.col;
                    ParseError::new("<ltl>", 1, col, format!("in state predicate: {}", e.message))
                })?;
                lx.toks.push((Tok::Pred(expr), i));
                while chars.peek().is_some_and(|&(j, _)| j <= i + end) {
                    chars.next();
                }
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let mut end = i;
                while let Some(&(j, d)) = chars.peek() {
                    if d.is_alphanumeric() || d == '_' || d == '\'' {
                        end = j + d.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                lx.toks.push((Tok::Word(text[i..end].to_string()), i));
                continue;
            }
            return Err(err(text, i, format!("unknown operator `{c}`")));
        }
        Ok(lx.toks)
    }
}

struct LtlParser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl LtlParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.text.len())
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(x)) if x == w)
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(err(self.text, self.offset(), format!("expected {what}")))
        }
    }

    fn implies(&mut self) -> Result<Ltl, ParseError> {
        let l = self.or()?;
        if self.peek() == Some(&Tok::Implies) {
            self.pos += 1;
            return Ok(Ltl::implies(l, self.implies()?));
        }
        Ok(l)
    }

    fn or(&mut self) -> Result<Ltl, ParseError> {
        let mut l = self.and()?;
        while self.peek() == Some(&Tok::Or) || self.is_word("or") {
            self.pos += 1;
            l = Ltl::or(l, self.and()?);
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<Ltl, ParseError> {
        let mut l = self.until()?;
        while self.peek() == Some(&Tok::And) || self.is_word("and") {
            self.pos += 1;
            l = Ltl::and(l, self.until()?);
        }
        Ok(l)
    }

    fn until(&mut self) -> Result<Ltl, ParseError> {
        let l = self.unary()?;
        if self.is_word("U") {
            self.pos += 1;
            return Ok(Ltl::until(l, self.until()?));
        }
        if self.is_word("R") {
            self.pos += 1;
            return Ok(Ltl::release(l, self.until()?));
        }
        Ok(l)
    }

    fn starts_unary(&self) -> bool {
        match self.peek() {
            Some(Tok::Word(w)) => !matches!(w.as_str(), "and" | "or" | "U" | "R"),
            Some(Tok::Pred(_) | Tok::LParen | Tok::LBracket | Tok::Not) => true,
            _ => false,
        }
    }

    fn event_name(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(err(self.text, self.offset(), "expected an event name")),
        }
    }

    fn unary(&mut self) -> Result<Ltl, ParseError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Ltl::not(self.unary()?))
            }
            Some(Tok::LBracket) => {
                self.pos += 1;
                let ev = self.event_name()?;
                self.expect(Tok::RBracket, "`]`")?;
                if self.starts_unary() {
                    Ok(After(ev, b(self.unary()?)))
                } else {
                    Ok(Ltl::executed(&ev))
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.implies()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Pred(e)) => {
                self.pos += 1;
                Ok(Ltl::pred(e))
            }
            Some(Tok::Word(w)) => {
                self.pos += 1;
                match w.as_str() {
                    "not" => Ok(Ltl::not(self.unary()?)),
                    "X" => Ok(Ltl::next(self.unary()?)),
                    "G" => Ok(Ltl::globally(self.unary()?)),
                    "F" => Ok(Ltl::finally(self.unary()?)),
                    "true" | "TRUE" => Ok(True),
                    "false" | "FALSE" => Ok(False),
                    "e" if self.peek() == Some(&Tok::LParen) => {
                        self.pos += 1;
                        let ev = self.event_name()?;
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(Ltl::enabled(&ev))
                    }
                    "and" | "or" | "U" | "R" => Err(err(self.text, at, format!("`{w}` needs a left operand"))),
                    _ => Ok(Ltl::executed(&w)),
                }
            }
            Some(t) => Err(err(self.text, at, format!("unexpected {}", describe(&t)))),
            None => Err(err(self.text, at, "unexpected end of formula")),
        }
    }
}

fn describe(t: &Tok) -> &'static str {
    match t {
        Tok::RParen => "`)`",
        Tok::RBracket => "`]`",
        Tok::Implies => "`=>`",
        Tok::And => "`and`",
        Tok::Or => "`or`",
        _ => "token",
    }
}

pub fn parse_ltl(text: &str) -> Result<Ltl, ParseError> {
    let toks = Lexer::run(text)?;
    let mut p = LtlParser { text, toks, pos: 0 };
    let f = p.implies()?;
    if p.pos < p.toks.len() {
        return Err(err(text, p.offset(), "unexpected input after formula"));
    }
    Ok(f)
}
