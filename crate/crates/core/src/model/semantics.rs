//! Initial states, enabledness and event firing for one machine in one
//! constant universe.

use thiserror::Error;

use crate::error::EvalFault;
use crate::model::ast::Expr;
use crate::model::eval::{eval_expr, Scope};
use crate::model::project::{Event, Machine, Project, Universe, MAX_DOMAIN};
use crate::model::value::{Bindings, DomainError, State, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("{location}: {fault}")]
    Eval { location: String, fault: EvalFault },
    #[error("{location}: value `{value}` of `{var}` is outside its type {ty}")]
    TypeViolation { location: String, var: String, value: String, ty: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
}

/// One enabled occurrence of an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub event: usize,
    pub binding: Bindings,
    pub target: State,
}

pub struct Semantics<'a> {
    pub project: &'a Project,
    pub machine: &'a Machine,
    pub universe: &'a Universe,
    /// Parameter values per event, in declaration order.
    param_domains: Vec<Vec<Vec<Value>>>,
}

impl<'a> Semantics<'a> {
    pub fn new(project: &'a Project, machine: &'a Machine, universe: &'a Universe) -> Result<Self, SemanticsError> {
        let mut param_domains = Vec::new();
        for e in &machine.events {
            let mut doms = Vec::new();
            for p in &e.params {
                doms.push(p.ty.enumerate(&project.symbols, MAX_DOMAIN)?);
            }
            param_domains.push(doms);
        }
        Ok(Semantics { project, machine, universe, param_domains })
    }

    fn scope<'s>(&'s self, state: &'s State, binding: Option<&'s Bindings>) -> Scope<'s> {
        let scope = Scope::new(&self.project.symbols).with(&self.universe.constants).with(&state.bindings);
        match binding {
            Some(b) => scope.with(b),
            None => scope,
        }
    }

    /// Evaluates an expression over the constants and a state.
    pub fn eval(&self, state: &State, expr: &Expr) -> Result<Value, EvalFault> {
        eval_expr(expr, &self.scope(state, None))
    }

    pub fn eval_with(&self, state: &State, binding: &Bindings, expr: &Expr) -> Result<Value, EvalFault> {
        eval_expr(expr, &self.scope(state, Some(binding)))
    }

    fn checked(&self, location: &str, bindings: Bindings) -> Result<State, SemanticsError> {
        for v in &self.machine.variables {
            match bindings.get(&v.name) {
                Some(val) if v.ty.contains(val, &self.project.symbols) => {}
                other => {
                    return Err(SemanticsError::TypeViolation {
                        location: location.to_string(),
                        var: v.name.clone(),
                        value: other.map(|x| x.to_string()).unwrap_or_else(|| "<unset>".into()),
                        ty: v.ty.to_string(),
                    })
                }
            }
        }
        Ok(State::new(bindings))
    }

    pub fn init_states(&self) -> Result<Vec<State>, SemanticsError> {
        let empty = State::default();
        let mut bindings = Bindings::new();
        for a in &self.machine.init {
            let v = self.eval(&empty, &a.expr).map_err(|fault| SemanticsError::Eval {
                location: format!("{} init @{}", self.machine.name, a.label),
                fault,
            })?;
            let ty = &self.machine.variable(&a.var).expect("typechecked").ty;
            bindings.insert(a.var.clone(), ty.coerce(v));
        }
        Ok(vec![self.checked(&format!("{} init", self.machine.name), bindings)?])
    }

    /// Whether all guards hold. Evaluation faults count as false.
    pub fn guards_hold(&self, event: &Event, state: &State, binding: &Bindings) -> bool {
        event
            .guards
            .iter()
            .all(|g| matches!(self.eval_with(state, binding, &g.item), Ok(Value::Bool(true))))
    }

    /// Enabled parameter bindings of one event, in lexicographic order.
    pub fn enabled_bindings(&self, event: usize, state: &State) -> Vec<Bindings> {
        let ev = &self.machine.events[event];
        let doms = &self.param_domains[event];
        let mut out = Vec::new();
        if doms.iter().any(|d| d.is_empty()) {
            return out;
        }
        let mut digits = vec![0usize; doms.len()];
        loop {
            let binding: Bindings =
                ev.params.iter().zip(&digits).zip(doms).map(|((p, &i), d)| (p.name.clone(), d[i].clone())).collect();
            if self.guards_hold(ev, state, &binding) {
                out.push(binding);
            }
            let mut pos = digits.len();
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < doms[pos].len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }

    /// Simultaneous assignment of the event's actions.
    pub fn fire(&self, state: &State, event: usize, binding: &Bindings) -> Result<State, SemanticsError> {
        let next = self.apply(state, event, binding)?;
        let ev = &self.machine.events[event];
        self.checked(&format!("{}.{}", self.machine.name, ev.name), next.bindings)
    }

    /// Like [`Semantics::fire`] but without checking the result against
    /// the variable types.
    pub fn apply(&self, state: &State, event: usize, binding: &Bindings) -> Result<State, SemanticsError> {
        let ev = &self.machine.events[event];
        let mut next = state.bindings.clone();
        for a in &ev.actions {
            let v = self.eval_with(state, binding, &a.expr).map_err(|fault| SemanticsError::Eval {
                location: format!("{}.{} @{}", self.machine.name, ev.name, a.label),
                fault,
            })?;
            let ty = &self.machine.variable(&a.var).expect("typechecked").ty;
            next.insert(a.var.clone(), ty.coerce(v));
        }
        Ok(State::new(next))
    }

    /// Every enabled transition, by event declaration order then binding.
    pub fn successors(&self, state: &State) -> Result<Vec<Transition>, SemanticsError> {
        let mut out = Vec::new();
        for event in 0..self.machine.events.len() {
            for binding in self.enabled_bindings(event, state) {
                let target = self.fire(state, event, &binding)?;
                out.push(Transition { event, binding, target });
            }
        }
        Ok(out)
    }

    pub fn event_index(&self, name: &str) -> Result<usize, SemanticsError> {
        self.machine.event_index(name).ok_or_else(|| SemanticsError::UnknownEvent(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::project::parse_project;

    fn project(src: &str) -> Project {
        parse_project(&[("m.ebs".to_string(), src.to_string())]).unwrap()
    }

    #[test]
    fn counter_fires_and_disables() {
        let p = project("machine m variables x : 0..2 init @act1 x := 0 end event inc where @g x < 2 then @a x := x + 1 end end");
        let m = p.machine("m").unwrap();
        let u = &p.universes(m).unwrap()[0];
        let s = Semantics::new(&p, m, u).unwrap();
        let init = s.init_states().unwrap();
        let succ = s.successors(&init[0]).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].target.get("x"), Some(&Value::Int(1)));
        let two = State::new([("x".to_string(), Value::Int(2))].into());
        assert!(s.successors(&two).unwrap().is_empty());
    }

    #[test]
    fn simultaneous_assignment_swaps() {
        let p = project(
            "machine m variables x : 0..2 y : 0..2 init @act1 x := 1 @act2 y := 2 end event sw then @a x := y @b y := x end end",
        );
        let m = p.machine("m").unwrap();
        let u = &p.universes(m).unwrap()[0];
        let s = Semantics::new(&p, m, u).unwrap();
        let init = &s.init_states().unwrap()[0];
        let next = s.fire(init, 0, &Bindings::new()).unwrap();
        assert_eq!(next.get("x"), Some(&Value::Int(2)));
        assert_eq!(next.get("y"), Some(&Value::Int(1)));
    }

    #[test]
    fn leaving_the_type_is_reported() {
        let p = project("machine m variables x : 0..1 init @act1 x := 1 end event inc then @a x := x + 1 end end");
        let m = p.machine("m").unwrap();
        let u = &p.universes(m).unwrap()[0];
        let s = Semantics::new(&p, m, u).unwrap();
        let init = &s.init_states().unwrap()[0];
        assert!(matches!(s.successors(init), Err(SemanticsError::TypeViolation { .. })));
    }

    #[test]
    fn guard_fault_disables() {
        let p = project(
            "context c sets S = {a, b} end \
             machine m sees c variables f : S +-> 0..1 init @act1 f := {a |-> 0} end \
             event e any s : S where @g f(s) = 0 end end",
        );
        let m = p.machine("m").unwrap();
        let u = &p.universes(m).unwrap()[0];
        let s = Semantics::new(&p, m, u).unwrap();
        let init = &s.init_states().unwrap()[0];
        let b = s.enabled_bindings(0, init);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0]["s"].to_string(), "a");
    }
}
