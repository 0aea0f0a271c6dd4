//! Runtime values, semantic types and states.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::model::ast::{BinOp, Expr};

/// An element of a declared enumerated set. Ordered by declaration index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EnumElem {
    pub set: Arc<str>,
    pub index: u32,
    pub name: Arc<str>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Enum(EnumElem),
    Set(BTreeSet<Value>),
    Map(BTreeMap<Value, Value>),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    /// Unambiguous encoding used for state keys; maps and sets are bracketed differently.
    pub fn write_canonical(&self, out: &mut String) {
        match self {
            Value::Set(items) => {
                out.push('{');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    v.write_canonical(out);
                }
                out.push('}');
            }
            Value::Map(pairs) => {
                out.push('[');
                for (i, (k, v)) in pairs.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    k.write_canonical(out);
                    out.push_str("|->");
                    v.write_canonical(out);
                }
                out.push(']');
            }
            other => out.push_str(&other.to_string()),
        }
    }

    /// Literal expression denoting this value.
    pub fn to_expr(&self) -> Expr {
        match self {
            Value::Bool(b) => Expr::Bool(*b),
            Value::Int(n) => Expr::Int(*n),
            Value::Enum(e) => Expr::Ident(e.name.to_string()),
            Value::Set(items) => Expr::SetLit(items.iter().map(Value::to_expr).collect()),
            Value::Map(pairs) => Expr::SetLit(
                pairs.iter().map(|(k, v)| Expr::binary(BinOp::Maplet, k.to_expr(), v.to_expr())).collect(),
            ),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => write!(f, "TRUE"),
            Value::Bool(false) => write!(f, "FALSE"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Enum(e) => write!(f, "{}", e.name),
            Value::Set(items) => {
                write!(f, "{{")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
            Value::Map(pairs) => {
                write!(f, "{{")?;
                for (i, (k, v)) in pairs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k} |-> {v}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Name-to-value map, ordered by name.
pub type Bindings = BTreeMap<String, Value>;

pub fn render_bindings(b: &Bindings) -> String {
    b.iter().map(|(k, v)| format!("{k} = {v}")).collect::<Vec<_>>().join(", ")
}

/// Finite type of a variable, constant or parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum SemanticType {
    Bool,
    IntRange(i64, i64),
    Enum(String),
    Set(Box<SemanticType>),
    Func {
        dom: Box<SemanticType>,
        cod: Box<SemanticType>,
        total: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("type `{ty}` has more than {limit} values")]
    TooLarge { ty: String, limit: u128 },
    #[error("unknown set `{0}`")]
    UnknownSet(String),
}

impl fmt::Display for SemanticType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemanticType::Bool => write!(f, "BOOL"),
            SemanticType::IntRange(lo, hi) => write!(f, "{lo}..{hi}"),
            SemanticType::Enum(n) => write!(f, "{n}"),
            SemanticType::Set(t) => write!(f, "SET({t})"),
            SemanticType::Func { dom, cod, total } => {
                let arrow = if *total { "-->" } else { "+->" };
                if matches!(**dom, SemanticType::Func { .. }) {
                    write!(f, "({dom}) {arrow} {cod}")
                } else {
                    write!(f, "{dom} {arrow} {cod}")
                }
            }
        }
    }
}

/// Declared enumerated sets, indexed by set and by element.
#[derive(Debug, Clone, Default)]
pub struct Symbols {
    sets: BTreeMap<String, Vec<Value>>,
    elements: BTreeMap<String, Value>,
}

impl Symbols {
    pub fn add_set(&mut self, name: &str, elements: &[String]) {
        let set: Arc<str> = Arc::from(name);
        let values: Vec<Value> = elements
            .iter()
            .enumerate()
            .map(|(i, e)| Value::Enum(EnumElem { set: set.clone(), index: i as u32, name: Arc::from(e.as_str()) }))
            .collect();
        for (e, v) in elements.iter().zip(&values) {
            self.elements.insert(e.clone(), v.clone());
        }
        self.sets.insert(name.to_string(), values);
    }

    pub fn set_elements(&self, name: &str) -> Option<&[Value]> {
        self.sets.get(name).map(Vec::as_slice)
    }

    pub fn element(&self, name: &str) -> Option<&Value> {
        self.elements.get(name)
    }

    pub fn is_set(&self, name: &str) -> bool {
        self.sets.contains_key(name)
    }

    /// Value of an identifier that names a set or an element.
    pub fn lookup(&self, name: &str) -> Option<Value> {
        if let Some(v) = self.elements.get(name) {
            return Some(v.clone());
        }
        self.sets.get(name).map(|vs| Value::Set(vs.iter().cloned().collect()))
    }
}

impl SemanticType {
    /// Number of values, saturating.
    pub fn cardinality(&self, symbols: &Symbols) -> Result<u128, DomainError> {
        Ok(match self {
            SemanticType::Bool => 2,
            SemanticType::IntRange(lo, hi) => (*hi as i128 - *lo as i128 + 1) as u128,
            SemanticType::Enum(n) => {
                symbols.set_elements(n).ok_or_else(|| DomainError::UnknownSet(n.clone()))?.len() as u128
            }
            SemanticType::Set(t) => {
                let n = t.cardinality(symbols)?;
                if n >= 127 {
                    u128::MAX
                } else {
                    1u128 << n
                }
            }
            SemanticType::Func { dom, cod, total } => {
                let d = dom.cardinality(symbols)?;
                let c = cod.cardinality(symbols)? + u128::from(!*total);
                let exp = u32::try_from(d).unwrap_or(u32::MAX);
                c.checked_pow(exp).unwrap_or(u128::MAX)
            }
        })
    }

    /// All values of the type in canonical enumeration order.
    pub fn enumerate(&self, symbols: &Symbols, limit: u128) -> Result<Vec<Value>, DomainError> {
        let n = self.cardinality(symbols)?;
        if n > limit {
            return Err(DomainError::TooLarge { ty: self.to_string(), limit });
        }
        Ok(match self {
            SemanticType::Bool => vec![Value::Bool(false), Value::Bool(true)],
            SemanticType::IntRange(lo, hi) => (*lo..=*hi).map(Value::Int).collect(),
            SemanticType::Enum(name) => symbols.set_elements(name).expect("checked by cardinality").to_vec(),
            SemanticType::Set(t) => {
                let base = t.enumerate(symbols, limit)?;
                (0u64..(1u64 << base.len()))
                    .map(|mask| {
                        Value::Set(
                            base.iter()
                                .enumerate()
                                .filter(|(i, _)| mask & (1 << i) != 0)
                                .map(|(_, v)| v.clone())
                                .collect(),
                        )
                    })
                    .collect()
            }
            SemanticType::Func { dom, cod, total } => {
                let keys = dom.enumerate(symbols, limit)?;
                let mut images: Vec<Option<Value>> = Vec::new();
                if !*total {
                    images.push(None);
                }
                images.extend(cod.enumerate(symbols, limit)?.into_iter().map(Some));
                let mut out = Vec::with_capacity(n as usize);
                let mut digits = vec![0usize; keys.len()];
                loop {
                    let map: BTreeMap<Value, Value> = keys
                        .iter()
                        .zip(&digits)
                        .filter_map(|(k, &d)| images[d].clone().map(|v| (k.clone(), v)))
                        .collect();
                    out.push(Value::Map(map));
                    // Odometer with the first key most significant.
                    let mut pos = keys.len();
                    loop {
                        if pos == 0 {
                            return Ok(out);
                        }
                        pos -= 1;
                        digits[pos] += 1;
                        if digits[pos] < images.len() {
                            break;
                        }
                        digits[pos] = 0;
                    }
                }
            }
        })
    }

    pub fn contains(&self, v: &Value, symbols: &Symbols) -> bool {
        match (self, v) {
            (SemanticType::Bool, Value::Bool(_)) => true,
            (SemanticType::IntRange(lo, hi), Value::Int(n)) => lo <= n && n <= hi,
            (SemanticType::Enum(name), Value::Enum(e)) => {
                &*e.set == name.as_str() && symbols.set_elements(name).is_some()
            }
            (SemanticType::Set(t), Value::Set(items)) => items.iter().all(|x| t.contains(x, symbols)),
            (SemanticType::Func { dom, cod, total }, Value::Map(pairs)) => {
                pairs.iter().all(|(k, x)| dom.contains(k, symbols) && cod.contains(x, symbols))
                    && (!*total
                        || dom.cardinality(symbols).map(|n| n == pairs.len() as u128).unwrap_or(false))
            }
            (SemanticType::Func { total: false, .. }, Value::Set(items)) => items.is_empty(),
            _ => false,
        }
    }

    /// Brings a value into the canonical representation for this type.
    pub fn coerce(&self, v: Value) -> Value {
        match (self, v) {
            (SemanticType::Func { .. }, Value::Set(items)) if items.is_empty() => Value::Map(BTreeMap::new()),
            (_, v) => v,
        }
    }
}

/// A machine state: a total assignment of values to the machine's variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct State {
    pub bindings: Bindings,
}

impl State {
    pub fn new(bindings: Bindings) -> Self {
        State { bindings }
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.bindings.get(var)
    }

    /// Deterministic serialization of the bindings; equal keys iff equal states.
    pub fn canonical_key(&self) -> String {
        let mut key = String::new();
        for (name, value) in &self.bindings {
            key.push_str(name);
            key.push('=');
            value.write_canonical(&mut key);
            key.push(';');
        }
        key
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render_bindings(&self.bindings))
    }
}
