//! Recursive-descent parser for `.ebs` model files and standalone expressions.

use crate::error::ParseError;
use crate::model::ast::*;
use crate::model::lexer::{tokenize, Span, Sym, Token, TokenKind};

const RESERVED: &[&str] = &[
    "context",
    "machine",
    "extends",
    "refines",
    "sees",
    "sets",
    "constants",
    "axioms",
    "variables",
    "invariants",
    "init",
    "INITIALISATION",
    "event",
    "any",
    "where",
    "when",
    "then",
    "end",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

/// Token cursor shared by the model, LTL, VO and view parsers.
pub struct Parser<'a> {
    pub(crate) file: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    pub fn new(file: &'a str, src: &'a str) -> Result<Self, ParseError> {
        Ok(Parser { file, tokens: tokenize(file, src)?, pos: 0 })
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    pub fn peek_at(&self, ahead: usize) -> &Token {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    pub fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Eof)
    }

    pub fn error_at(&self, span: Span, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.file, span.line, span.col, msg)
    }

    pub fn error_here(&self, msg: impl Into<String>) -> ParseError {
        let t = self.peek();
        ParseError::new(self.file, t.span.line, t.span.col, format!("{}, found {}", msg.into(), t.describe()))
    }

    pub fn is_sym(&self, sym: Sym) -> bool {
        self.peek().kind == TokenKind::Sym(sym)
    }

    pub fn eat_sym(&mut self, sym: Sym) -> bool {
        if self.is_sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, sym: Sym) -> Result<Span, ParseError> {
        if self.is_sym(sym) {
            Ok(self.bump().span)
        } else {
            Err(self.error_here(format!("expected `{}`", crate::model::lexer::sym_text(sym))))
        }
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == kw)
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<Span, ParseError> {
        if self.is_kw(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.error_here(format!("expected `{kw}`")))
        }
    }

    /// A non-reserved identifier.
    pub fn expect_ident(&mut self, what: &str) -> Result<String, ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(s) if !is_reserved(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error_here(format!("expected {what}"))),
        }
    }

    fn at_plain_ident(&self) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if !is_reserved(s))
    }

    fn expect_label(&mut self) -> Result<String, ParseError> {
        match &self.peek().kind {
            TokenKind::Label(l) => {
                let l = l.clone();
                self.bump();
                Ok(l)
            }
            _ => Err(self.error_here("expected a label such as `@grd1`")),
        }
    }

    fn at_label(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Label(_))
    }

    fn origin(&self, span: Span) -> Origin {
        Origin { file: self.file.to_string(), line: span.line }
    }

    // ---- expressions -------------------------------------------------------

    pub fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.parse_or()?;
        if self.eat_sym(Sym::Implies) {
            let rhs = self.parse_expr()?;
            return Ok(Expr::binary(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.eat_sym(Sym::Or) || self.eat_kw("or") {
            let rhs = self.parse_and()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_not()?;
        while self.eat_sym(Sym::And) || self.eat_kw("and") {
            let rhs = self.parse_not()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_not(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym(Sym::Not) || self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.parse_not()?)));
        }
        self.parse_rel()
    }

    fn rel_op(&self) -> Option<BinOp> {
        Some(match &self.peek().kind {
            TokenKind::Sym(Sym::Eq) => BinOp::Eq,
            TokenKind::Sym(Sym::Neq) => BinOp::Neq,
            TokenKind::Sym(Sym::Lt) => BinOp::Lt,
            TokenKind::Sym(Sym::Le) => BinOp::Le,
            TokenKind::Sym(Sym::Gt) => BinOp::Gt,
            TokenKind::Sym(Sym::Ge) => BinOp::Ge,
            TokenKind::Sym(Sym::In) => BinOp::In,
            TokenKind::Ident(s) if s == "in" => BinOp::In,
            _ => return None,
        })
    }

    fn parse_rel(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.parse_override()?;
        if let Some(op) = self.rel_op() {
            self.bump();
            let rhs = self.parse_override()?;
            if self.rel_op().is_some() {
                return Err(self.error_here("comparison operators do not chain; add parentheses"));
            }
            return Ok(Expr::binary(op, lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_override(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_maplet()?;
        while self.eat_sym(Sym::Override) {
            let rhs = self.parse_maplet()?;
            lhs = Expr::binary(BinOp::Override, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_maplet(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_range()?;
        while self.eat_sym(Sym::Maplet) {
            let rhs = self.parse_range()?;
            lhs = Expr::binary(BinOp::Maplet, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_range(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.parse_add()?;
        if self.eat_sym(Sym::DotDot) {
            let rhs = self.parse_add()?;
            return Ok(Expr::binary(BinOp::Range, lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_add(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_mul()?;
        loop {
            let op = if self.is_sym(Sym::Plus) {
                BinOp::Add
            } else if self.is_sym(Sym::Minus) {
                BinOp::Sub
            } else {
                break;
            };
            self.bump();
            let rhs = self.parse_mul()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_mul(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        while self.eat_sym(Sym::Star) {
            let rhs = self.parse_unary()?;
            lhs = Expr::binary(BinOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.is_sym(Sym::Minus) {
            self.bump();
            if let TokenKind::Int(n) = self.peek().kind {
                self.bump();
                return Ok(Expr::Int(-n));
            }
            return Ok(Expr::Neg(Box::new(self.parse_unary()?)));
        }
        self.parse_postfix()
    }

    fn parse_postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.parse_primary()?;
        while self.is_sym(Sym::LParen) {
            self.bump();
            let arg = self.parse_expr()?;
            self.expect_sym(Sym::RParen)?;
            e = Expr::Apply(Box::new(e), Box::new(arg));
        }
        Ok(e)
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().kind.clone() {
            TokenKind::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            TokenKind::Ident(s) => match s.as_str() {
                "TRUE" | "true" => {
                    self.bump();
                    Ok(Expr::Bool(true))
                }
                "FALSE" | "false" => {
                    self.bump();
                    Ok(Expr::Bool(false))
                }
                _ if is_reserved(&s) || s == "and" || s == "or" || s == "in" => {
                    Err(self.error_here("expected an expression"))
                }
                _ => {
                    self.bump();
                    Ok(Expr::Ident(s))
                }
            },
            TokenKind::Sym(Sym::LParen) => {
                self.bump();
                let e = self.parse_expr()?;
                self.expect_sym(Sym::RParen)?;
                Ok(e)
            }
            TokenKind::Sym(Sym::LBrace) => {
                self.bump();
                let mut items = Vec::new();
                if !self.is_sym(Sym::RBrace) {
                    loop {
                        items.push(self.parse_expr()?);
                        if !self.eat_sym(Sym::Comma) {
                            break;
                        }
                    }
                }
                self.expect_sym(Sym::RBrace)?;
                Ok(Expr::SetLit(items))
            }
            _ => Err(self.error_here("expected an expression")),
        }
    }

    // ---- types -------------------------------------------------------------

    pub fn parse_type(&mut self) -> Result<TypeExpr, ParseError> {
        let base = self.parse_type_atom()?;
        let total = if self.eat_sym(Sym::TotalFn) {
            true
        } else if self.eat_sym(Sym::PartialFn) {
            false
        } else {
            return Ok(base);
        };
        let cod = self.parse_type()?;
        Ok(TypeExpr::Func { dom: Box::new(base), cod: Box::new(cod), total })
    }

    fn parse_int_literal(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat_sym(Sym::Minus);
        match self.peek().kind {
            TokenKind::Int(n) => {
                self.bump();
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.error_here("expected an integer bound")),
        }
    }

    fn parse_type_atom(&mut self) -> Result<TypeExpr, ParseError> {
        match self.peek().kind.clone() {
            TokenKind::Int(_) | TokenKind::Sym(Sym::Minus) => {
                let start = self.peek().span;
                let lo = self.parse_int_literal()?;
                self.expect_sym(Sym::DotDot)?;
                let hi = self.parse_int_literal()?;
                if lo > hi {
                    return Err(self.error_at(start, format!("empty range type {lo}..{hi}")));
                }
                Ok(TypeExpr::Range(lo, hi))
            }
            TokenKind::Sym(Sym::LParen) => {
                self.bump();
                let t = self.parse_type()?;
                self.expect_sym(Sym::RParen)?;
                Ok(t)
            }
            TokenKind::Ident(s) if s == "BOOL" => {
                self.bump();
                Ok(TypeExpr::Bool)
            }
            TokenKind::Ident(s) if (s == "SET" || s == "POW") && self.peek_at(1).kind == TokenKind::Sym(Sym::LParen) => {
                self.bump();
                self.bump();
                let t = self.parse_type()?;
                self.expect_sym(Sym::RParen)?;
                Ok(TypeExpr::Set(Box::new(t)))
            }
            _ => Ok(TypeExpr::Named(self.expect_ident("a type")?)),
        }
    }

    // ---- declarations ------------------------------------------------------

    pub fn parse_decls(&mut self) -> Result<Vec<Decl>, ParseError> {
        let mut decls = Vec::new();
        while !self.at_eof() {
            if self.is_kw("context") {
                decls.push(Decl::Context(self.parse_context()?));
            } else if self.is_kw("machine") {
                decls.push(Decl::Machine(self.parse_machine()?));
            } else {
                return Err(self.error_here("expected `context` or `machine`"));
            }
        }
        Ok(decls)
    }

    fn parse_context(&mut self) -> Result<ContextDecl, ParseError> {
        let start = self.expect_kw("context")?;
        let name = self.expect_ident("a context name")?;
        let extends = if self.eat_kw("extends") { Some(self.expect_ident("a context name")?) } else { None };
        let mut ctx = ContextDecl {
            name,
            extends,
            sets: Vec::new(),
            constants: Vec::new(),
            axioms: Vec::new(),
            origin: self.origin(start),
        };
        loop {
            if self.eat_kw("end") {
                return Ok(ctx);
            } else if self.eat_kw("sets") {
                while self.at_plain_ident() {
                    let name = self.expect_ident("a set name")?;
                    self.expect_sym(Sym::Eq)?;
                    self.expect_sym(Sym::LBrace)?;
                    let mut elements = Vec::new();
                    loop {
                        elements.push(self.expect_ident("an element name")?);
                        if !self.eat_sym(Sym::Comma) {
                            break;
                        }
                    }
                    self.expect_sym(Sym::RBrace)?;
                    ctx.sets.push(EnumSetDecl { name, elements });
                }
            } else if self.eat_kw("constants") {
                while self.at_plain_ident() {
                    let name = self.expect_ident("a constant name")?;
                    self.expect_sym(Sym::Colon)?;
                    let ty = self.parse_type()?;
                    let value = if self.eat_sym(Sym::Eq) { Some(self.parse_expr()?) } else { None };
                    ctx.constants.push(ConstantDecl { name, ty, value });
                }
            } else if self.eat_kw("axioms") {
                while self.at_label() {
                    let label = self.expect_label()?;
                    ctx.axioms.push(Labeled::new(label, self.parse_expr()?));
                }
            } else {
                return Err(self.error_here("expected `sets`, `constants`, `axioms` or `end`"));
            }
        }
    }

    fn parse_actions(&mut self) -> Result<Vec<Action>, ParseError> {
        let mut actions = Vec::new();
        while self.at_label() {
            let label = self.expect_label()?;
            let var = self.expect_ident("an assigned variable")?;
            self.expect_sym(Sym::Assign)?;
            let expr = self.parse_expr()?;
            actions.push(Action { label, var, expr });
        }
        Ok(actions)
    }

    fn parse_machine(&mut self) -> Result<MachineDecl, ParseError> {
        let start = self.expect_kw("machine")?;
        let name = self.expect_ident("a machine name")?;
        let refines = if self.eat_kw("refines") { Some(self.expect_ident("a machine name")?) } else { None };
        let mut sees = Vec::new();
        if self.eat_kw("sees") {
            loop {
                sees.push(self.expect_ident("a context name")?);
                if !self.eat_sym(Sym::Comma) {
                    break;
                }
            }
        }
        let mut m = MachineDecl {
            name,
            refines,
            sees,
            variables: Vec::new(),
            invariants: Vec::new(),
            init: None,
            events: Vec::new(),
            origin: self.origin(start),
        };
        loop {
            if self.eat_kw("end") {
                return Ok(m);
            } else if self.eat_kw("variables") {
                while self.at_plain_ident() {
                    let v = self.expect_ident("a variable name")?;
                    self.expect_sym(Sym::Colon)?;
                    let ty = self.parse_type()?;
                    m.variables.push((v, ty));
                    self.eat_sym(Sym::Comma);
                }
            } else if self.eat_kw("invariants") {
                while self.at_label() {
                    let label = self.expect_label()?;
                    m.invariants.push(Labeled::new(label, self.parse_expr()?));
                }
            } else if self.is_kw("init") || self.is_kw("INITIALISATION") {
                let span = self.bump().span;
                if m.init.is_some() {
                    return Err(self.error_at(span, "second init block"));
                }
                self.eat_kw("then");
                let actions = self.parse_actions()?;
                self.expect_kw("end")?;
                m.init = Some(actions);
            } else if self.is_kw("event") {
                m.events.push(self.parse_event()?);
            } else {
                return Err(self.error_here("expected `variables`, `invariants`, `init`, `event` or `end`"));
            }
        }
    }

    fn parse_event(&mut self) -> Result<EventDecl, ParseError> {
        let start = self.expect_kw("event")?;
        let name = self.expect_ident("an event name")?;
        let extends = if self.eat_kw("extends") { Some(self.expect_ident("an event name")?) } else { None };
        let mut ev = EventDecl {
            name,
            extends,
            params: Vec::new(),
            guards: Vec::new(),
            actions: Vec::new(),
            origin: self.origin(start),
        };
        if self.eat_kw("any") {
            while self.at_plain_ident() {
                let p = self.expect_ident("a parameter name")?;
                self.expect_sym(Sym::Colon)?;
                let ty = self.parse_type()?;
                ev.params.push((p, ty));
                self.eat_sym(Sym::Comma);
            }
        }
        if self.eat_kw("where") || self.eat_kw("when") {
            while self.at_label() {
                let label = self.expect_label()?;
                ev.guards.push(Labeled::new(label, self.parse_expr()?));
            }
        }
        if self.eat_kw("then") {
            ev.actions = self.parse_actions()?;
        }
        self.expect_kw("end")?;
        Ok(ev)
    }
}

/// Parses a complete expression, rejecting trailing input.
pub fn parse_expr_str(file: &str, text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(file, text)?;
    let e = p.parse_expr()?;
    if !p.at_eof() {
        return Err(p.error_here("unexpected trailing input"));
    }
    Ok(e)
}

pub fn parse_type_str(file: &str, text: &str) -> Result<TypeExpr, ParseError> {
    let mut p = Parser::new(file, text)?;
    let t = p.parse_type()?;
    if !p.at_eof() {
        return Err(p.error_here("unexpected trailing input"));
    }
    Ok(t)
}

/// Parses every context and machine declared in one source file.
pub fn parse_source(file: &str, text: &str) -> Result<Vec<Decl>, ParseError> {
    Parser::new(file, text)?.parse_decls()
}
