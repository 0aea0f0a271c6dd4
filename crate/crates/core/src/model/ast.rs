//! Syntax trees for contexts, machines, events and expressions.

use std::fmt;

use serde::Serialize;

/// Where a declaration came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Origin {
    pub file: String,
    pub line: u32,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Implies,
    Or,
    And,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    Override,
    Maplet,
    Range,
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Implies => "=>",
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "=",
            BinOp::Neq => "/=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::In => "∈",
            BinOp::Override => "<+",
            BinOp::Maplet => "|->",
            BinOp::Range => "..",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    /// Binding strength; larger binds tighter.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq
            | BinOp::Neq
            | BinOp::Lt
            | BinOp::Le
            | BinOp::Gt
            | BinOp::Ge
            | BinOp::In => 5,
            BinOp::Override => 6,
            BinOp::Maplet => 7,
            BinOp::Range => 8,
            BinOp::Add | BinOp::Sub => 9,
            BinOp::Mul => 10,
        }
    }
}

/// Expression language shared by axioms, invariants, guards, actions,
/// proof-obligation parameters and LTL state predicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Expr {
    Bool(bool),
    Int(i64),
    Ident(String),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    SetLit(Vec<Expr>),
    Apply(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn ident(name: impl Into<String>) -> Expr {
        Expr::Ident(name.into())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Visits every identifier occurring in the expression.
    pub fn for_each_ident<'a>(&'a self, f: &mut dyn FnMut(&'a str)) {
        match self {
            Expr::Bool(_) | Expr::Int(_) => {}
            Expr::Ident(name) => f(name),
            Expr::Not(e) | Expr::Neg(e) => e.for_each_ident(f),
            Expr::Binary(_, l, r) | Expr::Apply(l, r) => {
                l.for_each_ident(f);
                r.for_each_ident(f);
            }
            Expr::SetLit(items) => items.iter().for_each(|e| e.for_each_ident(f)),
        }
    }

    /// Replaces identifiers for which `subst` yields an expression.
    pub fn substitute(&self, subst: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Bool(_) | Expr::Int(_) => self.clone(),
            Expr::Ident(name) => subst(name).unwrap_or_else(|| self.clone()),
            Expr::Not(e) => Expr::Not(Box::new(e.substitute(subst))),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(subst))),
            Expr::Binary(op, l, r) => Expr::binary(*op, l.substitute(subst), r.substitute(subst)),
            Expr::Apply(l, r) => Expr::Apply(Box::new(l.substitute(subst)), Box::new(r.substitute(subst))),
            Expr::SetLit(items) => Expr::SetLit(items.iter().map(|e| e.substitute(subst)).collect()),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, outer: u8) -> fmt::Result {
        match self {
            Expr::Bool(true) => write!(f, "TRUE"),
            Expr::Bool(false) => write!(f, "FALSE"),
            Expr::Int(n) if *n < 0 => write!(f, "({n})"),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Ident(name) => write!(f, "{name}"),
            Expr::Not(e) if outer >= 4 => write!(f, "(not({e}))"),
            Expr::Not(e) => write!(f, "not({e})"),
            Expr::Neg(e) if outer >= 11 => write!(f, "(-({e}))"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let paren = p <= outer;
                if paren {
                    write!(f, "(")?;
                }
                let (lp, rp) = match op {
                    BinOp::Implies => (p, p - 1),
                    // non-associative
                    _ if p == 5 || *op == BinOp::Range => (p, p),
                    _ => (p - 1, p),
                };
                l.fmt_prec(f, lp)?;
                if *op == BinOp::Range {
                    write!(f, "..")?;
                } else {
                    write!(f, " {} ", op.symbol())?;
                }
                r.fmt_prec(f, rp)?;
                if paren {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Expr::SetLit(items) => {
                write!(f, "{{")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    e.fmt_prec(f, 0)?;
                }
                write!(f, "}}")
            }
            Expr::Apply(fun, arg) => {
                fun.fmt_prec(f, 11)?;
                write!(f, "(")?;
                arg.fmt_prec(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Surface syntax of a type annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TypeExpr {
    Bool,
    Range(i64, i64),
    Named(String),
    Set(Box<TypeExpr>),
    Func {
        dom: Box<TypeExpr>,
        cod: Box<TypeExpr>,
        total: bool,
    },
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Bool => write!(f, "BOOL"),
            TypeExpr::Range(lo, hi) => write!(f, "{lo}..{hi}"),
            TypeExpr::Named(n) => write!(f, "{n}"),
            TypeExpr::Set(t) => write!(f, "SET({t})"),
            TypeExpr::Func { dom, cod, total } => {
                let arrow = if *total { "-->" } else { "+->" };
                match **dom {
                    TypeExpr::Func { .. } => write!(f, "({dom}) {arrow} {cod}"),
                    _ => write!(f, "{dom} {arrow} {cod}"),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Labeled<T> {
    pub label: String,
    pub item: T,
}

impl<T> Labeled<T> {
    pub fn new(label: impl Into<String>, item: T) -> Self {
        Labeled { label: label.into(), item }
    }
}

/// Deterministic assignment `var := expr`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Action {
    pub label: String,
    pub var: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnumSetDecl {
    pub name: String,
    pub elements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstantDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub value: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContextDecl {
    pub name: String,
    pub extends: Option<String>,
    pub sets: Vec<EnumSetDecl>,
    pub constants: Vec<ConstantDecl>,
    pub axioms: Vec<Labeled<Expr>>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventDecl {
    pub name: String,
    pub extends: Option<String>,
    pub params: Vec<(String, TypeExpr)>,
    pub guards: Vec<Labeled<Expr>>,
    pub actions: Vec<Action>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MachineDecl {
    pub name: String,
    pub refines: Option<String>,
    pub sees: Vec<String>,
    pub variables: Vec<(String, TypeExpr)>,
    pub invariants: Vec<Labeled<Expr>>,
    pub init: Option<Vec<Action>>,
    pub events: Vec<EventDecl>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Decl {
    Context(ContextDecl),
    Machine(MachineDecl),
}
