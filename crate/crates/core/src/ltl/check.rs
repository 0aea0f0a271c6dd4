//! Product emptiness: nested depth-first search decides, breadth-first
//! search extracts a lasso with a shortest prefix.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use super::buchi::{to_buchi, Buchi};
use super::{Atom, Ltl};
use crate::explore::{StateGraph, Trace};
use crate::model::project::{Machine, Project};
use crate::model::semantics::Semantics;
use crate::model::typeck::TyEnv;
use crate::model::value::Value;

/// Bare transition structure: states are implicit indices, letters are
/// read on edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kripke {
    pub initial: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub outgoing: Vec<Vec<usize>>,
}

impl Kripke {
    pub fn from_graph(g: &StateGraph) -> Self {
        Kripke {
            initial: g.initial.clone(),
            edges: g.transitions.iter().map(|t| (t.src, t.dst)).collect(),
            outgoing: g.outgoing.clone(),
        }
    }
}

/// An ultimately periodic path as edge indices; `cycle` is nonempty and
/// returns to the source of its first edge.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct LassoEdges {
    pub prefix: Vec<usize>,
    pub cycle: Vec<usize>,
}

/// Finds a path of `k` violating `f`, if any. `val` gives the truth of an
/// atom at the position whose outgoing edge is the given index.
pub fn check_kripke<E>(
    k: &Kripke,
    f: &Ltl,
    val: &mut dyn FnMut(&Atom, usize) -> Result<bool, E>,
) -> Result<Option<LassoEdges>, E> {
    let aut = to_buchi(&Ltl::not(f.clone()));
    let mut letters = Vec::with_capacity(k.edges.len());
    for t in 0..k.edges.len() {
        let mut l = Vec::with_capacity(aut.atoms.len());
        for a in &aut.atoms {
            l.push(val(a, t)?);
        }
        letters.push(l);
    }
    let product = Product::build(k, &aut, &letters);
    if !product.nonempty() {
        return Ok(None);
    }
    Ok(Some(product.lasso().expect("nested search found an accepting cycle")))
}

struct Product {
    /// (edge, automaton node) per product state, in breadth-first order.
    states: Vec<(usize, usize)>,
    succ: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
    initial: Vec<usize>,
    accepting: Vec<bool>,
}

impl Product {
    fn build(k: &Kripke, aut: &Buchi, letters: &[Vec<bool>]) -> Product {
        let mut p = Product { states: Vec::new(), succ: Vec::new(), parent: Vec::new(), initial: Vec::new(), accepting: Vec::new() };
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut add = |p: &mut Product, key: (usize, usize), parent: Option<usize>, queue: &mut VecDeque<usize>| {
            *ids.entry(key).or_insert_with(|| {
                p.states.push(key);
                p.succ.push(Vec::new());
                p.parent.push(parent);
                p.accepting.push(aut.accepting[key.1]);
                queue.push_back(p.states.len() - 1);
                p.states.len() - 1
            })
        };
        for &s in &k.initial {
            for &t in &k.outgoing[s] {
                for &e in &aut.outgoing[0] {
                    if Buchi::admits(&aut.edges[e].label, &letters[t]) {
                        let id = add(&mut p, (t, aut.edges[e].dst), None, &mut queue);
                        if !p.initial.contains(&id) {
                            p.initial.push(id);
                        }
                    }
                }
            }
        }
        while let Some(id) = queue.pop_front() {
            let (t, q) = p.states[id];
            let dst = k.edges[t].1;
            for &t2 in &k.outgoing[dst] {
                for &e in &aut.outgoing[q] {
                    if Buchi::admits(&aut.edges[e].label, &letters[t2]) {
                        let nid = add(&mut p, (t2, aut.edges[e].dst), Some(id), &mut queue);
                        if !p.succ[id].contains(&nid) {
                            p.succ[id].push(nid);
                        }
                    }
                }
            }
        }
        p
    }

    /// Nested depth-first search for a reachable accepting cycle.
    fn nonempty(&self) -> bool {
        let n = self.states.len();
        let mut blue = vec![false; n];
        let mut red = vec![false; n];
        for &root in &self.initial {
            if blue[root] {
                continue;
            }
            blue[root] = true;
            let mut stack = vec![(root, 0usize)];
            while let Some(&mut (v, ref mut i)) = stack.last_mut() {
                if let Some(&w) = self.succ[v].get(*i) {
                    *i += 1;
                    if !blue[w] {
                        blue[w] = true;
                        stack.push((w, 0));
                    }
                    continue;
                }
                stack.pop();
                if self.accepting[v] && self.red_search(v, &mut red) {
                    return true;
                }
            }
        }
        false
    }

    fn red_search(&self, seed: usize, red: &mut [bool]) -> bool {
        let mut stack = vec![seed];
        while let Some(v) = stack.pop() {
            for &w in &self.succ[v] {
                if w == seed {
                    return true;
                }
                if !red[w] {
                    red[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }

    /// Shortest cycle through `a` as product states `a, ..., a`.
    fn cycle_through(&self, a: usize) -> Option<Vec<usize>> {
        let mut prev: HashMap<usize, usize> = HashMap::new();
        let mut queue = VecDeque::from([a]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.succ[v] {
                if w == a {
                    let mut path = vec![a];
                    let mut cur = v;
                    while cur != a {
                        path.push(cur);
                        cur = prev[&cur];
                    }
                    path.push(a);
                    path.reverse();
                    return Some(path);
                }
                if let Entry::Vacant(e) = prev.entry(w) {
                    e.insert(v);
                    queue.push_back(w);
                }
            }
        }
        None
    }

    fn lasso(&self) -> Option<LassoEdges> {
        for a in 0..self.states.len() {
            if !self.accepting[a] {
                continue;
            }
            let Some(cycle) = self.cycle_through(a) else { continue };
            let mut prefix = Vec::new();
            let mut cur = self.parent[a];
            while let Some(p) = cur {
                prefix.push(self.states[p].0);
                cur = self.parent[p];
            }
            prefix.reverse();
            // `cycle` runs a, ..., a; its edges are those read at every state but the last.
            let cycle = cycle[..cycle.len() - 1].iter().map(|&p| self.states[p].0).collect();
            return Some(LassoEdges { prefix, cycle });
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtlError {
    #[error("the state space was truncated; LTL verdicts would be unsound")]
    Truncated,
    #[error("{0}")]
    Invalid(String),
    #[error("atom `{atom}` is undefined in state {state}: {message}")]
    Atom { atom: String, state: String, message: String },
}

/// Counterexample: a finite prefix followed by a cycle repeated forever.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lasso {
    pub prefix: Trace,
    pub cycle: Trace,
    #[serde(skip)]
    pub edges: LassoEdges,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LtlVerdict {
    pub holds: bool,
    pub counterexample: Option<Lasso>,
    pub universe_id: String,
}

/// Checks that events exist and state predicates are well typed.
pub fn validate(project: &Project, machine: &Machine, f: &Ltl) -> Result<(), LtlError> {
    for ev in f.events() {
        if machine.event(ev).is_none() {
            return Err(LtlError::Invalid(format!("`{}` has no event `{ev}`", machine.name)));
        }
    }
    let env = TyEnv::for_machine(project, machine, true);
    let mut res = Ok(());
    f.for_each_atom(&mut |a| {
        if let (Atom::Pred(e), Ok(())) = (a, &res) {
            res = env.check_pred(e).map_err(LtlError::Invalid);
        }
    });
    res
}

pub fn check_ltl(sem: &Semantics, graph: &StateGraph, f: &Ltl) -> Result<LtlVerdict, LtlError> {
    validate(sem.project, sem.machine, f)?;
    if graph.truncated {
        return Err(LtlError::Truncated);
    }
    let k = Kripke::from_graph(graph);
    let mut val = |a: &Atom, t: usize| -> Result<bool, LtlError> {
        let edge = &graph.transitions[t];
        match a {
            Atom::Pred(e) => {
                let state = &graph.states[edge.src];
                match sem.eval(state, e) {
                    Ok(Value::Bool(b)) => Ok(b),
                    Ok(v) => Err(LtlError::Atom { atom: a.to_string(), state: state.to_string(), message: format!("not a boolean: {v}") }),
                    Err(fault) => Err(LtlError::Atom { atom: a.to_string(), state: state.to_string(), message: fault.to_string() }),
                }
            }
            Atom::Enabled(ev) => Ok(graph.enabled(edge.src, ev)),
            Atom::Executed(ev) => Ok(!edge.synthetic && &edge.event == ev),
        }
    };
    let found = check_kripke(&k, f, &mut val)?;
    let counterexample = found.map(|edges| {
        let cycle_start = graph.transitions[edges.cycle[0]].src;
        let prefix_start = edges.prefix.first().map(|&t| graph.transitions[t].src).unwrap_or(cycle_start);
        Lasso {
            prefix: graph.trace_along(prefix_start, &edges.prefix),
            cycle: graph.trace_along(cycle_start, &edges.cycle),
            edges,
        }
    });
    Ok(LtlVerdict { holds: counterexample.is_none(), counterexample, universe_id: graph.universe_id.clone() })
}
