//! Operational semantics of expressions.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::EvalFault;
use crate::model::ast::{BinOp, Expr};
use crate::model::value::{Bindings, Symbols, Value};

/// Ranges are materialized only up to this many elements.
const MAX_RANGE: i64 = 100_000;

/// Name resolution for evaluation.
pub trait Env {
    fn lookup(&self, name: &str) -> Option<Value>;
}

impl Env for Bindings {
    fn lookup(&self, name: &str) -> Option<Value> {
        self.get(name).cloned()
    }
}

/// Layered scope: later frames shadow earlier ones, enumerated sets come last.
pub struct Scope<'a> {
    symbols: &'a Symbols,
    frames: Vec<&'a Bindings>,
}

impl<'a> Scope<'a> {
    pub fn new(symbols: &'a Symbols) -> Self {
        Scope { symbols, frames: Vec::new() }
    }

    pub fn with(mut self, frame: &'a Bindings) -> Self {
        self.frames.push(frame);
        self
    }
}

impl Env for Scope<'_> {
    fn lookup(&self, name: &str) -> Option<Value> {
        for frame in self.frames.iter().rev() {
            if let Some(v) = frame.get(name) {
                return Some(v.clone());
            }
        }
        self.symbols.lookup(name)
    }
}

fn type_fault(what: &str, e: &Expr) -> EvalFault {
    EvalFault::Type(format!("{what} in `{e}`"))
}

fn int(e: &Expr, env: &dyn Env) -> Result<i64, EvalFault> {
    eval_expr(e, env)?.as_int().ok_or_else(|| type_fault("expected an integer", e))
}

fn boolean(e: &Expr, env: &dyn Env) -> Result<bool, EvalFault> {
    eval_expr(e, env)?.as_bool().ok_or_else(|| type_fault("expected a boolean", e))
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Set(s), Value::Map(m)) | (Value::Map(m), Value::Set(s)) => s.is_empty() && m.is_empty(),
        _ => a == b,
    }
}

/// Evaluates an expression. Total on well-typed input except for partial
/// function application outside the domain and integer overflow.
pub fn eval_expr(expr: &Expr, env: &dyn Env) -> Result<Value, EvalFault> {
    match expr {
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Int(n) => Ok(Value::Int(*n)),
        Expr::Ident(name) => env.lookup(name).ok_or_else(|| EvalFault::Unbound(name.clone())),
        Expr::Not(e) => Ok(Value::Bool(!boolean(e, env)?)),
        Expr::Neg(e) => int(e, env)?
            .checked_neg()
            .map(Value::Int)
            .ok_or_else(|| EvalFault::Overflow(expr.to_string())),
        Expr::Binary(op, l, r) => eval_binary(expr, *op, l, r, env),
        Expr::SetLit(items) => {
            if !items.is_empty() && items.iter().all(|e| matches!(e, Expr::Binary(BinOp::Maplet, ..))) {
                let mut map = BTreeMap::new();
                for item in items {
                    let Expr::Binary(_, k, v) = item else { unreachable!() };
                    let k = eval_expr(k, env)?;
                    let v = eval_expr(v, env)?;
                    if let Some(prev) = map.insert(k.clone(), v.clone()) {
                        if prev != v {
                            return Err(EvalFault::Type(format!("`{expr}` maps `{k}` to two values")));
                        }
                    }
                }
                Ok(Value::Map(map))
            } else {
                let set = items.iter().map(|e| eval_expr(e, env)).collect::<Result<BTreeSet<_>, _>>()?;
                Ok(Value::Set(set))
            }
        }
        Expr::Apply(f, arg) => {
            let fv = eval_expr(f, env)?;
            let av = eval_expr(arg, env)?;
            match fv {
                Value::Map(pairs) => pairs.get(&av).cloned().ok_or_else(|| EvalFault::OutsideDomain {
                    fun: f.to_string(),
                    arg: av.to_string(),
                }),
                Value::Set(s) if s.is_empty() => {
                    Err(EvalFault::OutsideDomain { fun: f.to_string(), arg: av.to_string() })
                }
                _ => Err(type_fault("applied value is not a function", expr)),
            }
        }
    }
}

fn eval_binary(expr: &Expr, op: BinOp, l: &Expr, r: &Expr, env: &dyn Env) -> Result<Value, EvalFault> {
    let overflow = || EvalFault::Overflow(expr.to_string());
    Ok(match op {
        BinOp::And => Value::Bool(boolean(l, env)? && boolean(r, env)?),
        BinOp::Or => Value::Bool(boolean(l, env)? || boolean(r, env)?),
        BinOp::Implies => Value::Bool(!boolean(l, env)? || boolean(r, env)?),
        BinOp::Eq => Value::Bool(values_equal(&eval_expr(l, env)?, &eval_expr(r, env)?)),
        BinOp::Neq => Value::Bool(!values_equal(&eval_expr(l, env)?, &eval_expr(r, env)?)),
        BinOp::Lt => Value::Bool(int(l, env)? < int(r, env)?),
        BinOp::Le => Value::Bool(int(l, env)? <= int(r, env)?),
        BinOp::Gt => Value::Bool(int(l, env)? > int(r, env)?),
        BinOp::Ge => Value::Bool(int(l, env)? >= int(r, env)?),
        BinOp::Add => Value::Int(int(l, env)?.checked_add(int(r, env)?).ok_or_else(overflow)?),
        BinOp::Sub => Value::Int(int(l, env)?.checked_sub(int(r, env)?).ok_or_else(overflow)?),
        BinOp::Mul => Value::Int(int(l, env)?.checked_mul(int(r, env)?).ok_or_else(overflow)?),
        BinOp::In => {
            // Bounds check without materializing the range.
            if let Expr::Binary(BinOp::Range, lo, hi) = r {
                let x = int(l, env)?;
                return Ok(Value::Bool(int(lo, env)? <= x && x <= int(hi, env)?));
            }
            let x = eval_expr(l, env)?;
            match eval_expr(r, env)? {
                Value::Set(items) => Value::Bool(items.contains(&x)),
                Value::Map(m) if m.is_empty() => Value::Bool(false),
                _ => return Err(type_fault("right operand of `∈` is not a set", expr)),
            }
        }
        BinOp::Range => {
            let lo = int(l, env)?;
            let hi = int(r, env)?;
            if hi.saturating_sub(lo) >= MAX_RANGE {
                return Err(EvalFault::Type(format!("range `{expr}` is too large to enumerate")));
            }
            Value::Set((lo..=hi).map(Value::Int).collect())
        }
        BinOp::Override => {
            let base = eval_expr(l, env)?;
            let upd = eval_expr(r, env)?;
            let as_map = |v: Value, side: &Expr| match v {
                Value::Map(m) => Ok(m),
                Value::Set(s) if s.is_empty() => Ok(BTreeMap::new()),
                _ => Err(type_fault("operand of `<+` is not a function", side)),
            };
            let mut m = as_map(base, l)?;
            m.extend(as_map(upd, r)?);
            Value::Map(m)
        }
        BinOp::Maplet => return Err(type_fault("maplet outside a set literal", expr)),
    })
}
