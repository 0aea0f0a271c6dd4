//! Static type checking of contexts and machines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::model::ast::{BinOp, Expr};
use crate::model::project::{Machine, Project, Typed};
use crate::model::value::SemanticType;

/// Inferred type of an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Bool,
    Int,
    Enum(String),
    Set(Box<Ty>),
    Func(Box<Ty>, Box<Ty>),
    Pair(Box<Ty>, Box<Ty>),
    /// The empty set literal, compatible with any set or function.
    Empty,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => write!(f, "BOOL"),
            Ty::Int => write!(f, "INT"),
            Ty::Enum(n) => write!(f, "{n}"),
            Ty::Set(t) => write!(f, "SET({t})"),
            Ty::Func(d, c) => write!(f, "{d} -> {c}"),
            Ty::Pair(a, b) => write!(f, "{a} × {b}"),
            Ty::Empty => write!(f, "{{}}"),
        }
    }
}

impl From<&SemanticType> for Ty {
    fn from(t: &SemanticType) -> Ty {
        match t {
            SemanticType::Bool => Ty::Bool,
            SemanticType::IntRange(..) => Ty::Int,
            SemanticType::Enum(n) => Ty::Enum(n.clone()),
            SemanticType::Set(t) => Ty::Set(Box::new(t.as_ref().into())),
            SemanticType::Func { dom, cod, .. } => Ty::Func(Box::new(dom.as_ref().into()), Box::new(cod.as_ref().into())),
        }
    }
}

/// Common type of two expressions, if any.
pub fn unify(a: &Ty, b: &Ty) -> Option<Ty> {
    Some(match (a, b) {
        (Ty::Empty, t @ (Ty::Set(_) | Ty::Func(..) | Ty::Empty)) | (t @ (Ty::Set(_) | Ty::Func(..)), Ty::Empty) => {
            t.clone()
        }
        (Ty::Set(x), Ty::Set(y)) => Ty::Set(Box::new(unify(x, y)?)),
        (Ty::Func(d1, c1), Ty::Func(d2, c2)) => Ty::Func(Box::new(unify(d1, d2)?), Box::new(unify(c1, c2)?)),
        (Ty::Pair(a1, b1), Ty::Pair(a2, b2)) => Ty::Pair(Box::new(unify(a1, a2)?), Box::new(unify(b1, b2)?)),
        _ if a == b => a.clone(),
        _ => return None,
    })
}

/// A type error found by the checker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// Context or machine name.
    pub scope: String,
    /// Element within the scope, e.g. `event login @grd1`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.scope, self.location, self.message)
    }
}

/// Names in scope for type inference.
#[derive(Default)]
pub struct TyEnv<'a> {
    project: Option<&'a Project>,
    names: BTreeMap<String, Ty>,
}

impl<'a> TyEnv<'a> {
    /// Sets, elements and the given constants.
    pub fn for_constants<'c>(project: &'a Project, constants: impl IntoIterator<Item = &'c Typed>) -> Self {
        let mut env = TyEnv { project: Some(project), names: BTreeMap::new() };
        for k in constants {
            env.bind(&k.name, (&k.ty).into());
        }
        env
    }

    /// Everything visible inside `machine`: constants and, if `with_vars`,
    /// variables.
    pub fn for_machine(project: &'a Project, machine: &Machine, with_vars: bool) -> Self {
        let mut env = TyEnv { project: Some(project), names: BTreeMap::new() };
        for k in project.visible_constants(machine) {
            env.bind(&k.name, (&k.ty).into());
        }
        if with_vars {
            for v in &machine.variables {
                env.bind(&v.name, (&v.ty).into());
            }
        }
        env
    }

    pub fn bind(&mut self, name: &str, ty: Ty) {
        self.names.insert(name.to_string(), ty);
    }

    fn lookup(&self, name: &str) -> Option<Ty> {
        if let Some(t) = self.names.get(name) {
            return Some(t.clone());
        }
        let symbols = &self.project?.symbols;
        if let Some(crate::model::value::Value::Enum(e)) = symbols.element(name) {
            return Some(Ty::Enum(e.set.to_string()));
        }
        symbols.is_set(name).then(|| Ty::Set(Box::new(Ty::Enum(name.to_string()))))
    }

    pub fn infer(&self, e: &Expr) -> Result<Ty, String> {
        let expect = |e: &Expr, want: Ty| -> Result<(), String> {
            let got = self.infer(e)?;
            if unify(&got, &want).is_none() {
                return Err(format!("`{e}` has type {got}, expected {want}"));
            }
            Ok(())
        };
        match e {
            Expr::Bool(_) => Ok(Ty::Bool),
            Expr::Int(_) => Ok(Ty::Int),
            Expr::Ident(n) => self.lookup(n).ok_or_else(|| format!("unknown identifier `{n}`")),
            Expr::Not(x) => expect(x, Ty::Bool).map(|_| Ty::Bool),
            Expr::Neg(x) => expect(x, Ty::Int).map(|_| Ty::Int),
            Expr::Binary(op, l, r) => match op {
                BinOp::And | BinOp::Or | BinOp::Implies => {
                    expect(l, Ty::Bool)?;
                    expect(r, Ty::Bool)?;
                    Ok(Ty::Bool)
                }
                BinOp::Eq | BinOp::Neq => {
                    let (a, b) = (self.infer(l)?, self.infer(r)?);
                    if matches!(a, Ty::Pair(..)) || matches!(b, Ty::Pair(..)) {
                        return Err(format!("maplet outside a set literal in `{e}`"));
                    }
                    unify(&a, &b)
                        .map(|_| Ty::Bool)
                        .ok_or_else(|| format!("cannot compare {a} with {b} in `{e}`"))
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    expect(l, Ty::Int)?;
                    expect(r, Ty::Int)?;
                    Ok(Ty::Bool)
                }
                BinOp::Add | BinOp::Sub | BinOp::Mul => {
                    expect(l, Ty::Int)?;
                    expect(r, Ty::Int)?;
                    Ok(Ty::Int)
                }
                BinOp::Range => {
                    expect(l, Ty::Int)?;
                    expect(r, Ty::Int)?;
                    Ok(Ty::Set(Box::new(Ty::Int)))
                }
                BinOp::In => {
                    let x = self.infer(l)?;
                    match self.infer(r)? {
                        Ty::Empty => Ok(Ty::Bool),
                        Ty::Set(t) if unify(&x, &t).is_some() => Ok(Ty::Bool),
                        s => Err(format!("`{l}` of type {x} cannot be a member of {s} in `{e}`")),
                    }
                }
                BinOp::Override => {
                    let (a, b) = (self.infer(l)?, self.infer(r)?);
                    match unify(&a, &b) {
                        Some(t @ (Ty::Func(..) | Ty::Empty)) => Ok(t),
                        _ => Err(format!("`<+` needs two functions of the same type, got {a} and {b}")),
                    }
                }
                BinOp::Maplet => Ok(Ty::Pair(Box::new(self.infer(l)?), Box::new(self.infer(r)?))),
            },
            Expr::SetLit(items) => {
                let mut acc: Option<Ty> = None;
                for it in items {
                    let t = self.infer(it)?;
                    acc = Some(match acc {
                        None => t,
                        Some(a) => unify(&a, &t).ok_or_else(|| format!("set literal `{e}` mixes {a} and {t}"))?,
                    });
                }
                Ok(match acc {
                    None => Ty::Empty,
                    Some(Ty::Pair(d, c)) => Ty::Func(d, c),
                    Some(t) => Ty::Set(Box::new(t)),
                })
            }
            Expr::Apply(f, a) => match self.infer(f)? {
                Ty::Func(d, c) => {
                    expect(a, *d)?;
                    Ok(*c)
                }
                t => Err(format!("`{f}` of type {t} is not a function")),
            },
        }
    }

    /// Checks that `e` is a predicate.
    pub fn check_pred(&self, e: &Expr) -> Result<(), String> {
        match self.infer(e)? {
            Ty::Bool => Ok(()),
            t => Err(format!("`{e}` has type {t}, expected a predicate")),
        }
    }

    pub fn check_assign(&self, target: &SemanticType, e: &Expr) -> Result<(), String> {
        let got = self.infer(e)?;
        let want: Ty = target.into();
        if unify(&got, &want).is_none() {
            return Err(format!("cannot assign `{e}` of type {got} to a variable of type {target}"));
        }
        Ok(())
    }
}

/// Type checks the whole project; an empty result means well-typed.
pub fn typecheck(project: &Project) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |scope: &str, location: String, message: String| {
        out.push(Diagnostic { scope: scope.to_string(), location, message });
    };

    for c in &project.contexts {
        let visible: Vec<Typed> = context_scope(project, &c.name);
        let env = TyEnv::for_constants(project, &visible);
        for k in &c.constants {
            if let Some(v) = &k.value {
                if let Err(m) = env.check_assign(&k.ty, v) {
                    diag(&c.name, format!("constant {}", k.name), m);
                }
            }
        }
        for a in &c.axioms {
            if let Err(m) = env.check_pred(&a.item) {
                diag(&c.name, format!("axiom @{}", a.label), m);
            }
        }
    }

    for m in &project.machines {
        let consts = TyEnv::for_machine(project, m, false);
        let env = TyEnv::for_machine(project, m, true);
        for i in &m.invariants {
            if let Err(msg) = env.check_pred(&i.item) {
                diag(&m.name, format!("invariant @{}", i.label), msg);
            }
        }
        if !m.has_init {
            diag(&m.name, "init".into(), "machine has no init clause".into());
        } else {
            let mut assigned = BTreeSet::new();
            for a in &m.init {
                match m.variable(&a.var) {
                    None => diag(&m.name, format!("init @{}", a.label), format!("unknown variable `{}`", a.var)),
                    Some(v) => {
                        if let Err(msg) = consts.check_assign(&v.ty, &a.expr) {
                            diag(&m.name, format!("init @{}", a.label), msg);
                        }
                    }
                }
                assigned.insert(a.var.as_str());
            }
            for v in &m.variables {
                if !assigned.contains(v.name.as_str()) {
                    diag(&m.name, "init".into(), format!("variable `{}` is not initialised", v.name));
                }
            }
        }
        for e in &m.events {
            let mut env = TyEnv::for_machine(project, m, true);
            for p in &e.params {
                env.bind(&p.name, (&p.ty).into());
            }
            for g in &e.guards {
                if let Err(msg) = env.check_pred(&g.item) {
                    diag(&m.name, format!("event {} @{}", e.name, g.label), msg);
                }
            }
            let mut targets = BTreeSet::new();
            for a in &e.actions {
                let loc = format!("event {} @{}", e.name, a.label);
                if !targets.insert(a.var.as_str()) {
                    diag(&m.name, loc.clone(), format!("variable `{}` assigned twice", a.var));
                }
                match m.variable(&a.var) {
                    None => diag(&m.name, loc, format!("unknown variable `{}`", a.var)),
                    Some(v) => {
                        if let Err(msg) = env.check_assign(&v.ty, &a.expr) {
                            diag(&m.name, loc, msg);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Constants visible in a context: its own and those of contexts it extends.
fn context_scope(project: &Project, name: &str) -> Vec<Typed> {
    let mut out = Vec::new();
    let mut cur = project.context(name);
    while let Some(c) = cur {
        out.extend(c.constants.iter().map(|k| Typed { name: k.name.clone(), ty: k.ty.clone() }));
        cur = c.extends.as_deref().and_then(|p| project.context(p));
    }
    out
}
