//! Breadth-first state space exploration, trace replay and graph export.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::error::ParseError;
use crate::model::ast::Expr;
use crate::model::lexer::{Sym, TokenKind};
use crate::model::parser::Parser;
use crate::model::semantics::{Semantics, SemanticsError};
use crate::model::value::{render_bindings, Bindings, State};

/// Label of the self-loops added to deadlock states.
pub const DEADLOCK_EVENT: &str = "⟨deadlock⟩";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: Option<usize>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 100_000, max_depth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub src: usize,
    pub event: String,
    pub binding: Bindings,
    pub dst: usize,
    pub synthetic: bool,
}

impl Edge {
    pub fn label(&self) -> String {
        event_label(&self.event, &self.binding)
    }
}

pub fn event_label(event: &str, binding: &Bindings) -> String {
    if binding.is_empty() {
        event.to_string()
    } else {
        format!("{event}({})", render_bindings(binding))
    }
}

/// Reachable states of one machine in one universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGraph {
    pub machine: String,
    pub universe_id: String,
    /// Discovery order.
    pub states: Vec<State>,
    pub transitions: Vec<Edge>,
    pub initial: Vec<usize>,
    pub deadlocks: Vec<usize>,
    pub truncated: bool,
    /// Outgoing transition indices per state, real edges first.
    pub outgoing: Vec<Vec<usize>>,
    /// Transition through which each state was first discovered.
    parent: Vec<Option<usize>>,
}

/// A finite execution: a start state and the steps taken from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub start: State,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub event: String,
    pub binding: Bindings,
    pub state: State,
}

impl Trace {
    pub fn new(start: State) -> Self {
        Trace { start, steps: Vec::new() }
    }

    pub fn last(&self) -> &State {
        self.steps.last().map(|s| &s.state).unwrap_or(&self.start)
    }

    pub fn events(&self) -> Vec<String> {
        self.steps.iter().map(|s| event_label(&s.event, &s.binding)).collect()
    }

    /// Checks that every step is an enabled occurrence whose firing yields
    /// the recorded state. Synthetic deadlock steps must keep the state.
    pub fn replay(&self, sem: &Semantics) -> Result<(), String> {
        let inits = sem.init_states().map_err(|e| e.to_string())?;
        if !inits.contains(&self.start) {
            return Err(format!("start state {} is not initial", self.start));
        }
        self.replay_from(sem)
    }

    /// Like [`Trace::replay`] but the start state need not be initial.
    pub fn replay_from(&self, sem: &Semantics) -> Result<(), String> {
        let mut cur = &self.start;
        for (i, step) in self.steps.iter().enumerate() {
            if step.event == DEADLOCK_EVENT {
                let live = sem.successors(cur).map_err(|e| e.to_string())?;
                if !live.is_empty() || &step.state != cur {
                    return Err(format!("step {}: deadlock loop from a live state", i + 1));
                }
            } else {
                let ev = sem.event_index(&step.event).map_err(|e| e.to_string())?;
                if !sem.enabled_bindings(ev, cur).contains(&step.binding) {
                    return Err(format!("step {}: {} is not enabled", i + 1, event_label(&step.event, &step.binding)));
                }
                let next = sem.fire(cur, ev, &step.binding).map_err(|e| e.to_string())?;
                if next != step.state {
                    return Err(format!("step {}: firing yields {next}, trace records {}", i + 1, step.state));
                }
            }
            cur = &step.state;
        }
        Ok(())
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "  0: {}", self.start)?;
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(f, "  {}: --{}--> {}", i + 1, event_label(&s.event, &s.binding), s.state)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{error}")]
pub struct ExploreError {
    pub error: SemanticsError,
    /// Execution leading to the faulting state, when there is one.
    pub trace: Option<Trace>,
}

impl From<SemanticsError> for ExploreError {
    fn from(error: SemanticsError) -> Self {
        ExploreError { error, trace: None }
    }
}

pub fn explore(sem: &Semantics, limits: Limits) -> Result<StateGraph, ExploreError> {
    let mut g = StateGraph {
        machine: sem.machine.name.clone(),
        universe_id: sem.universe.id.clone(),
        states: Vec::new(),
        transitions: Vec::new(),
        initial: Vec::new(),
        deadlocks: Vec::new(),
        truncated: false,
        outgoing: Vec::new(),
        parent: Vec::new(),
    };
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut depth: Vec<usize> = Vec::new();

    for s in sem.init_states()? {
        let key = s.canonical_key();
        if index.contains_key(&key) {
            continue;
        }
        if g.states.len() >= limits.max_states.max(1) {
            g.truncated = true;
            break;
        }
        index.insert(key, g.states.len());
        g.initial.push(g.states.len());
        g.states.push(s);
        g.outgoing.push(Vec::new());
        g.parent.push(None);
        depth.push(0);
    }

    let mut expanded = vec![false; g.states.len()];
    let mut next = 0;
    'bfs: while next < g.states.len() {
        let src = next;
        next += 1;
        if limits.max_depth.is_some_and(|d| depth[src] >= d) {
            if !sem.successors(&g.states[src]).map(|v| v.is_empty()).unwrap_or(false) {
                g.truncated = true;
            }
            continue;
        }
        let succ = sem.successors(&g.states[src]).map_err(|error| ExploreError {
            error,
            trace: Some(g.trace_to(src)),
        })?;
        for t in succ {
            let key = t.target.canonical_key();
            let dst = match index.get(&key) {
                Some(&i) => i,
                None => {
                    if g.states.len() >= limits.max_states {
                        g.truncated = true;
                        break 'bfs;
                    }
                    let i = g.states.len();
                    index.insert(key, i);
                    g.states.push(t.target);
                    g.outgoing.push(Vec::new());
                    g.parent.push(Some(g.transitions.len()));
                    depth.push(depth[src] + 1);
                    expanded.push(false);
                    i
                }
            };
            g.outgoing[src].push(g.transitions.len());
            g.transitions.push(Edge {
                src,
                event: sem.machine.events[t.event].name.clone(),
                binding: t.binding,
                dst,
                synthetic: false,
            });
        }
        expanded[src] = true;
    }

    for s in 0..g.states.len() {
        if expanded[s] && g.outgoing[s].is_empty() {
            g.deadlocks.push(s);
            g.outgoing[s].push(g.transitions.len());
            g.transitions.push(Edge {
                src: s,
                event: DEADLOCK_EVENT.to_string(),
                binding: Bindings::new(),
                dst: s,
                synthetic: true,
            });
        }
    }
    Ok(g)
}

impl StateGraph {
    /// Shortest execution from an initial state to `state`.
    pub fn trace_to(&self, state: usize) -> Trace {
        let mut edges = Vec::new();
        let mut cur = state;
        while let Some(t) = self.parent[cur] {
            edges.push(t);
            cur = self.transitions[t].src;
        }
        edges.reverse();
        self.trace_along(cur, &edges)
    }

    /// The execution starting at `start` that follows the given transitions.
    pub fn trace_along(&self, start: usize, edges: &[usize]) -> Trace {
        let mut trace = Trace::new(self.states[start].clone());
        for &t in edges {
            let e = &self.transitions[t];
            trace.steps.push(Step { event: e.event.clone(), binding: e.binding.clone(), state: self.states[e.dst].clone() });
        }
        trace
    }

    pub fn real_transitions(&self) -> impl Iterator<Item = &Edge> {
        self.transitions.iter().filter(|t| !t.synthetic)
    }

    /// Whether `event` has a real outgoing transition from `state`.
    pub fn enabled(&self, state: usize, event: &str) -> bool {
        self.outgoing[state].iter().any(|&t| !self.transitions[t].synthetic && self.transitions[t].event == event)
    }

    pub fn find_deadlocks(&self) -> Result<Vec<&State>, Refusal> {
        if self.truncated {
            return Err(Refusal::Truncated);
        }
        Ok(self.deadlocks.iter().map(|&i| &self.states[i]).collect())
    }

    /// Graphviz rendering. Identical graphs give identical bytes.
    pub fn to_dot(&self, opts: DotOptions) -> String {
        let esc = |s: &str| s.replace('\\', "\\\\").replace('"', "\\\"");
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", esc(&self.machine));
        let _ = writeln!(out, "  label=\"{} [{}]{}\";", esc(&self.machine), esc(&self.universe_id), if self.truncated { " (truncated)" } else { "" });
        out.push_str("  node [shape=box, fontname=\"monospace\"];\n");
        for (i, s) in self.states.iter().enumerate() {
            let label: Vec<String> = s.bindings.iter().map(|(k, v)| format!("{k} = {v}")).collect();
            let extra = if self.deadlocks.contains(&i) { ", color=red" } else { "" };
            let _ = writeln!(out, "  s{i} [label=\"{}\"{extra}];", esc(&label.join("\\n")).replace("\\\\n", "\\n"));
        }
        for &i in &self.initial {
            let _ = writeln!(out, "  init{i} [shape=point];\n  init{i} -> s{i};");
        }
        for t in &self.transitions {
            if t.synthetic && opts.elide_synthetic {
                continue;
            }
            let label = if opts.show_bindings { t.label() } else { t.event.clone() };
            let style = if t.synthetic { ", style=dashed" } else { "" };
            let _ = writeln!(out, "  s{} -> s{} [label=\"{}\"{style}];", t.src, t.dst, esc(&label));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct StateOut<'a> {
            id: usize,
            bindings: &'a State,
        }
        serde_json::json!({
            "machine": self.machine,
            "universe": self.universe_id,
            "truncated": self.truncated,
            "states": self.states.iter().enumerate().map(|(id, s)| StateOut { id, bindings: s }).collect::<Vec<_>>(),
            "transitions": self.transitions,
            "initial": self.initial,
            "deadlocks": self.deadlocks,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DotOptions {
    pub show_bindings: bool,
    pub elide_synthetic: bool,
}

impl Default for DotOptions {
    fn default() -> Self {
        DotOptions { show_bindings: true, elide_synthetic: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Refusal {
    #[error("the state space was truncated; the answer would be unsound")]
    Truncated,
}

/// One requested step of a trace: an event and optionally its arguments,
/// positional or named.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepSpec {
    pub event: String,
    pub args: Vec<(Option<String>, Expr)>,
}

impl StepSpec {
    pub fn event(name: &str) -> Self {
        StepSpec { event: name.to_string(), args: Vec::new() }
    }

    /// Parses `ev`, `ev(a, b)` or `ev(p = a)`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut steps = parse_steps(text)?;
        if steps.len() != 1 {
            return Err(ParseError::new("<trace>", 1, 1, "expected exactly one step"));
        }
        Ok(steps.remove(0))
    }
}

/// Parses a list of steps separated by whitespace, commas or semicolons.
pub fn parse_steps(text: &str) -> Result<Vec<StepSpec>, ParseError> {
    let mut p = Parser::new("<trace>", text)?;
    let mut steps = Vec::new();
    while !p.at_eof() {
        let event = p.expect_ident("event name")?;
        let mut args = Vec::new();
        if p.eat_sym(Sym::LParen) && !p.eat_sym(Sym::RParen) {
            loop {
                let named = matches!(p.peek().kind, TokenKind::Ident(_))
                    && matches!(p.peek_at(1).kind, TokenKind::Sym(Sym::Eq));
                let name = if named {
                    let n = p.expect_ident("parameter")?;
                    p.bump();
                    Some(n)
                } else {
                    None
                };
                args.push((name, p.parse_expr()?));
                if p.eat_sym(Sym::RParen) {
                    break;
                }
                p.expect_sym(Sym::Comma)?;
            }
        }
        steps.push(StepSpec { event, args });
        if !p.eat_sym(Sym::Comma) {
            p.eat_sym(Sym::Semi);
        }
    }
    Ok(steps)
}

impl fmt::Display for StepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.event)?;
        if !self.args.is_empty() {
            let args: Vec<String> = self
                .args
                .iter()
                .map(|(n, e)| match n {
                    Some(n) => format!("{n} = {e}"),
                    None => e.to_string(),
                })
                .collect();
            write!(f, "({})", args.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("step {step}: `{event}` is not feasible in {state}; enabled: {}", fmt_alts(.enabled))]
    Infeasible { step: usize, event: String, state: State, enabled: Vec<String>, prefix: Trace },
    #[error("step {step}: `{event}` is ambiguous; candidate bindings: {}", .bindings.join("; "))]
    Ambiguous { step: usize, event: String, bindings: Vec<String> },
    #[error("step {step}: {message}")]
    BadStep { step: usize, message: String },
    #[error("the machine has no initial state")]
    NoInitialState,
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

fn fmt_alts(a: &[String]) -> String {
    if a.is_empty() {
        "none".into()
    } else {
        a.join(", ")
    }
}

/// Replays a sequence of requested steps from the initial state.
pub fn check_trace(sem: &Semantics, steps: &[StepSpec]) -> Result<Trace, TraceError> {
    let init = sem.init_states()?;
    let start = init.into_iter().next().ok_or(TraceError::NoInitialState)?;
    let mut trace = Trace::new(start);
    for (i, spec) in steps.iter().enumerate() {
        let step = i + 1;
        let cur = trace.last().clone();
        let bad = |message: String| TraceError::BadStep { step, message };
        let ev = sem.event_index(&spec.event).map_err(|e| bad(e.to_string()))?;
        let params = &sem.machine.events[ev].params;
        if spec.args.len() > params.len() {
            return Err(bad(format!("`{}` takes {} argument(s)", spec.event, params.len())));
        }
        let mut wanted = Bindings::new();
        for (pos, (name, expr)) in spec.args.iter().enumerate() {
            let pname = match name {
                Some(n) if params.iter().any(|p| &p.name == n) => n.clone(),
                Some(n) => return Err(bad(format!("`{}` has no parameter `{n}`", spec.event))),
                None => params[pos].name.clone(),
            };
            let v = sem.eval(&cur, expr).map_err(|f| bad(format!("argument `{expr}`: {f}")))?;
            wanted.insert(pname, v);
        }
        let candidates: Vec<Bindings> = sem
            .enabled_bindings(ev, &cur)
            .into_iter()
            .filter(|b| wanted.iter().all(|(k, v)| b.get(k) == Some(v)))
            .collect();
        match candidates.len() {
            0 => {
                let mut enabled = Vec::new();
                for (j, e) in sem.machine.events.iter().enumerate() {
                    for b in sem.enabled_bindings(j, &cur) {
                        enabled.push(event_label(&e.name, &b));
                    }
                }
                return Err(TraceError::Infeasible { step, event: spec.to_string(), state: cur, enabled, prefix: trace });
            }
            1 => {
                let binding = candidates.into_iter().next().expect("one candidate");
                let state = sem.fire(&cur, ev, &binding)?;
                trace.steps.push(Step { event: spec.event.clone(), binding, state });
            }
            _ => {
                return Err(TraceError::Ambiguous {
                    step,
                    event: spec.to_string(),
                    bindings: candidates.iter().map(render_bindings).collect(),
                })
            }
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::project::{parse_project, Project};
    use crate::model::value::Value;

    fn project(src: &str) -> Project {
        parse_project(&[("m.ebs".to_string(), src.to_string())]).unwrap()
    }

    const COUNTER: &str = "machine m variables x : 0..3 init @act1 x := 0 end \
        event inc where @g x < 3 then @a x := x + 1 end \
        event reset where @g x = 3 then @a x := 0 end end";

    fn graph(p: &Project, limits: Limits) -> StateGraph {
        let m = p.machine("m").unwrap();
        let u = &p.universes(m).unwrap()[0];
        explore(&Semantics::new(p, m, u).unwrap(), limits).unwrap()
    }

    #[test]
    fn init_only_machine_has_one_deadlock() {
        let p = project("machine m variables x : 0..1 init @act1 x := 0 end end");
        let g = graph(&p, Limits::default());
        assert_eq!(g.states.len(), 1);
        assert_eq!(g.deadlocks, vec![0]);
        assert_eq!(g.transitions.len(), 1);
        assert!(g.transitions[0].synthetic);
        let dot = g.to_dot(DotOptions { show_bindings: true, elide_synthetic: true });
        assert!(!dot.contains("s0 -> s0"));
    }

    #[test]
    fn counter_cycle() {
        let p = project(COUNTER);
        let g = graph(&p, Limits::default());
        assert_eq!(g.states.len(), 4);
        assert_eq!(g.transitions.len(), 4);
        assert!(g.deadlocks.is_empty());
        assert!(!g.truncated);
        assert_eq!(g.trace_to(3).steps.len(), 3);
    }

    #[test]
    fn limits_truncate() {
        let p = project(COUNTER);
        let g = graph(&p, Limits { max_states: 1, max_depth: None });
        assert!(g.truncated);
        assert_eq!(g.states.len(), 1);
        assert!(g.find_deadlocks().is_err());
        let g = graph(&p, Limits { max_states: 100, max_depth: Some(2) });
        assert!(g.truncated);
        assert_eq!(g.states.len(), 3);
    }

    #[test]
    fn dot_is_deterministic() {
        let p = project(COUNTER);
        let a = graph(&p, Limits::default()).to_dot(DotOptions::default());
        let b = graph(&p, Limits::default()).to_dot(DotOptions::default());
        assert_eq!(a, b);
        assert!(a.starts_with("digraph \"m\" {"));
    }

    #[test]
    fn trace_replay_and_refusal() {
        let p = project(COUNTER);
        let m = p.machine("m").unwrap();
        let u = &p.universes(m).unwrap()[0];
        let sem = Semantics::new(&p, m, u).unwrap();
        let t = check_trace(&sem, &[StepSpec::event("inc"), StepSpec::event("inc")]).unwrap();
        assert_eq!(t.last().get("x"), Some(&Value::Int(2)));
        t.replay(&sem).unwrap();
        let err = check_trace(&sem, &[StepSpec::event("reset")]).unwrap_err();
        match err {
            TraceError::Infeasible { step, enabled, .. } => {
                assert_eq!(step, 1);
                assert_eq!(enabled, vec!["inc".to_string()]);
            }
            e => panic!("{e}"),
        }
        assert!(check_trace(&sem, &[]).unwrap().steps.is_empty());
    }

    #[test]
    fn ambiguous_parameter() {
        let p = project("machine m variables x : 0..3 init @act1 x := 0 end event set any v : 0..3 then @a x := v end end");
        let m = p.machine("m").unwrap();
        let u = &p.universes(m).unwrap()[0];
        let sem = Semantics::new(&p, m, u).unwrap();
        assert!(matches!(check_trace(&sem, &[StepSpec::event("set")]), Err(TraceError::Ambiguous { .. })));
        let t = check_trace(&sem, &[StepSpec::parse("set(v = 2)").unwrap()]).unwrap();
        assert_eq!(t.last().get("x"), Some(&Value::Int(2)));
        let t = check_trace(&sem, &[StepSpec::parse("set(3)").unwrap()]).unwrap();
        assert_eq!(t.last().get("x"), Some(&Value::Int(3)));
    }
}
