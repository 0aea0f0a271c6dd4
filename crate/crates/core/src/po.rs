//! Proof-obligation style checks: a predicate over every reachable state,
//! or inductively over every type-correct state.

use serde::Serialize;
use thiserror::Error;

use crate::error::ParseError;
use crate::explore::{StateGraph, Trace};
use crate::model::ast::Expr;
use crate::model::parser::parse_expr_str;
use crate::model::project::{Machine, Project};
use crate::model::semantics::{Semantics, SemanticsError};
use crate::model::typeck::TyEnv;
use crate::model::value::{Bindings, State, Value};

/// Default bound on the states enumerated by inductive checks.
pub const INDUCTIVE_BOUND: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PoMode {
    Reachable,
    Inductive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A reachable state falsifying the predicate and a shortest path to it.
    Reachable { state: State, trace: Trace },
    /// An initial state falsifying the predicate.
    Init { state: State },
    /// A step from a state satisfying the predicate and the `assumed`
    /// invariants to one that falsifies the predicate.
    Step { pre: State, event: String, binding: Bindings, post: State, assumed: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PoVerdict {
    pub holds: bool,
    pub mode: PoMode,
    pub witness: Option<Witness>,
    pub universe_id: String,
    /// Invariant label when the predicate is a machine invariant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PoError {
    #[error("the state space was truncated; the obligation cannot be discharged")]
    Truncated,
    #[error("{0}")]
    Invalid(String),
    #[error("`{expr}` is not well defined in state {state}: {message}")]
    WellDefinedness { expr: String, state: String, message: String },
    #[error("inductive check would enumerate {states} states (bound {bound}); use reachable mode instead")]
    TooLarge { states: u128, bound: u128 },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Parses `predicate [; mode=inductive|reachable]`.
pub fn parse_po_params(text: &str) -> Result<(Expr, Option<PoMode>), ParseError> {
    let (pred, mode) = match text.rsplit_once(';') {
        Some((p, m)) if m.trim().starts_with("mode") => (p, Some(m)),
        _ => (text, None),
    };
    let mode = match mode {
        None => None,
        Some(m) => {
            let value = m.split_once('=').map(|(_, v)| v.trim()).unwrap_or("");
            match value {
                "inductive" => Some(PoMode::Inductive),
                "reachable" => Some(PoMode::Reachable),
                other => {
                    let col = pred.chars().count() as u32 + 2;
                    return Err(ParseError::new("<po>", 1, col, format!("unknown mode `{other}`")));
                }
            }
        }
    };
    Ok((parse_expr_str("<po>", pred.trim())?, mode))
}

pub fn validate(project: &Project, machine: &Machine, p: &Expr) -> Result<(), PoError> {
    TyEnv::for_machine(project, machine, true).check_pred(p).map_err(PoError::Invalid)
}

fn holds_in(sem: &Semantics, state: &State, p: &Expr) -> Result<bool, PoError> {
    match sem.eval(state, p) {
        Ok(Value::Bool(b)) => Ok(b),
        Ok(v) => Err(PoError::Invalid(format!("`{p}` evaluates to {v}, not a boolean"))),
        Err(fault) => Err(PoError::WellDefinedness {
            expr: p.to_string(),
            state: state.to_string(),
            message: fault.to_string(),
        }),
    }
}

/// Whether `p` holds in every state of the graph; otherwise the first
/// violating state in discovery order is the witness.
pub fn check_reachable(sem: &Semantics, graph: &StateGraph, p: &Expr) -> Result<PoVerdict, PoError> {
    validate(sem.project, sem.machine, p)?;
    if graph.truncated {
        return Err(PoError::Truncated);
    }
    let mut witness = None;
    for (i, s) in graph.states.iter().enumerate() {
        if !holds_in(sem, s, p)? {
            witness = Some(Witness::Reachable { state: s.clone(), trace: graph.trace_to(i) });
            break;
        }
    }
    Ok(PoVerdict {
        holds: witness.is_none(),
        mode: PoMode::Reachable,
        witness,
        universe_id: graph.universe_id.clone(),
        label: None,
    })
}

/// Establishment by every initial state and preservation by every enabled
/// step from any type-correct state satisfying the assumed invariants and
/// `p`. States are visited in lexicographic order, so the witness is the
/// least violating pre-state.
///
/// Machine invariants are assumed only while they are themselves inductive
/// alongside `p`: one that fails initially, or that some step from an
/// assumed state breaks, is dropped and the scan repeats. Assuming an
/// unestablished invariant could otherwise make a non-invariant pass.
pub fn check_inductive(sem: &Semantics, p: &Expr, bound: u128) -> Result<PoVerdict, PoError> {
    validate(sem.project, sem.machine, p)?;
    let verdict = |witness: Option<Witness>| PoVerdict {
        holds: witness.is_none(),
        mode: PoMode::Inductive,
        witness,
        universe_id: sem.universe.id.clone(),
        label: None,
    };
    let invariants = &sem.machine.invariants;
    let true_in = |s: &State, e: &Expr| matches!(sem.eval(s, e), Ok(Value::Bool(true)));
    let inits = sem.init_states()?;
    for s in &inits {
        if !holds_in(sem, s, p)? {
            return Ok(verdict(Some(Witness::Init { state: s.clone() })));
        }
    }
    let mut assumed: Vec<bool> = invariants.iter().map(|inv| inits.iter().all(|s| true_in(s, &inv.item))).collect();

    let symbols = &sem.project.symbols;
    // Variables in name order: the order of state bindings.
    let mut vars: Vec<_> = sem.machine.variables.iter().collect();
    vars.sort_by(|a, b| a.name.cmp(&b.name));
    let mut total: u128 = 1;
    for v in &vars {
        let n = v.ty.cardinality(symbols).map_err(|e| PoError::Invalid(e.to_string()))?;
        total = total.saturating_mul(n);
    }
    if total > bound {
        return Err(PoError::TooLarge { states: total, bound });
    }
    let domains: Vec<Vec<Value>> = vars
        .iter()
        .map(|v| v.ty.enumerate(symbols, bound))
        .collect::<Result<_, _>>()
        .map_err(|e| PoError::Invalid(e.to_string()))?;
    if domains.iter().any(|d| d.is_empty()) {
        return Ok(verdict(None));
    }

    loop {
        let mut broken = vec![false; invariants.len()];
        let mut digits = vec![0usize; vars.len()];
        'states: loop {
            let state = State::new(vars.iter().zip(&digits).zip(&domains).map(|((v, &i), d)| (v.name.clone(), d[i].clone())).collect());
            let hyp = invariants.iter().zip(&assumed).all(|(inv, &a)| !a || true_in(&state, &inv.item));
            if hyp && holds_in(sem, &state, p)? {
                for (ev, e) in sem.machine.events.iter().enumerate() {
                    for binding in sem.enabled_bindings(ev, &state) {
                        let post = sem.apply(&state, ev, &binding)?;
                        if !holds_in(sem, &post, p)? {
                            let assumed = invariants.iter().zip(&assumed).filter(|(_, &a)| a).map(|(i, _)| i.label.clone()).collect();
                            return Ok(verdict(Some(Witness::Step { pre: state, event: e.name.clone(), binding, post, assumed })));
                        }
                        for (i, inv) in invariants.iter().enumerate() {
                            if assumed[i] && !broken[i] && !true_in(&post, &inv.item) {
                                broken[i] = true;
                            }
                        }
                    }
                }
            }
            let mut pos = digits.len();
            loop {
                if pos == 0 {
                    break 'states;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < domains[pos].len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
        if !broken.contains(&true) {
            return Ok(verdict(None));
        }
        for (a, b) in assumed.iter_mut().zip(broken) {
            *a &= !b;
        }
    }
}

/// One reachable-state verdict per invariant, in declaration order.
pub fn check_machine_invariants(sem: &Semantics, graph: &StateGraph) -> Result<Vec<PoVerdict>, PoError> {
    sem.machine
        .invariants
        .iter()
        .map(|inv| {
            let mut v = check_reachable(sem, graph, &inv.item)?;
            v.label = Some(inv.label.clone());
            Ok(v)
        })
        .collect()
}
