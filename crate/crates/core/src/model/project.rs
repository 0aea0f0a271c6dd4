//! Linking parsed declarations into a resolved project: context and machine
//! hierarchies, flattened events, and constant universes.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{EvalFault, ResolveError};
use crate::model::ast::*;
use crate::model::eval::{eval_expr, Scope};
use crate::model::parser::parse_source;
use crate::model::value::{Bindings, DomainError, SemanticType, Symbols, Value};

/// Upper bound on the number of constant valuations explored per machine.
pub const MAX_UNIVERSES: u128 = 10_000;
/// Upper bound on the values of a single deferred constant or parameter type.
pub const MAX_DOMAIN: u128 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Typed {
    pub name: String,
    pub ty: SemanticType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Constant {
    pub name: String,
    pub ty: SemanticType,
    /// `None` for deferred constants.
    pub value: Option<Expr>,
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Context {
    pub name: String,
    pub extends: Option<String>,
    pub sets: Vec<EnumSetDecl>,
    pub constants: Vec<Constant>,
    pub axioms: Vec<Labeled<Expr>>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub name: String,
    pub params: Vec<Typed>,
    pub guards: Vec<Labeled<Expr>>,
    pub actions: Vec<Action>,
    /// Parent event this one was merged with, if any. Cleared by flattening.
    pub extends: Option<String>,
    pub origin: Origin,
}

/// A machine with inherited variables, invariants, init actions and events
/// already merged in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Machine {
    pub name: String,
    pub refines: Option<String>,
    /// Base machine when this machine was derived by a scenario view.
    pub view_of: Option<String>,
    /// Every context visible to the machine, ancestors first.
    pub contexts: Vec<String>,
    pub variables: Vec<Typed>,
    pub invariants: Vec<Labeled<Expr>>,
    pub init: Vec<Action>,
    pub has_init: bool,
    pub events: Vec<Event>,
    /// Deferred constants pinned to a value (set by views).
    pub fixed_constants: Bindings,
    pub origin: Origin,
}

impl Machine {
    pub fn event(&self, name: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn event_index(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e.name == name)
    }

    pub fn variable(&self, name: &str) -> Option<&Typed> {
        self.variables.iter().find(|v| v.name == name)
    }

    /// Every expression of the machine, for symbol collection.
    pub fn expressions(&self) -> impl Iterator<Item = &Expr> {
        self.invariants
            .iter()
            .map(|i| &i.item)
            .chain(self.init.iter().map(|a| &a.expr))
            .chain(self.events.iter().flat_map(|e| {
                e.guards.iter().map(|g| &g.item).chain(e.actions.iter().map(|a| &a.expr))
            }))
    }
}

/// One valuation of the deferred constants a machine depends on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Universe {
    pub id: String,
    pub constants: Bindings,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UniverseError {
    #[error("unknown machine `{0}`")]
    UnknownMachine(String),
    #[error("constant `{name}`: {fault}")]
    Constant { name: String, fault: EvalFault },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("deferred constants of `{machine}` admit more than {limit} valuations")]
    TooMany { machine: String, limit: u128 },
}

#[derive(Debug, Clone)]
pub struct Project {
    pub contexts: Vec<Context>,
    pub machines: Vec<Machine>,
    pub symbols: Symbols,
    decls: BTreeMap<String, MachineDecl>,
}

/// Parses and links a set of `(file name, text)` sources.
pub fn parse_project(sources: &[(String, String)]) -> Result<Project, Vec<ResolveError>> {
    if sources.is_empty() {
        return Err(vec![ResolveError::NoSources]);
    }
    let mut errors = Vec::new();
    let mut decls = Vec::new();
    for (file, text) in sources {
        match parse_source(file, text) {
            Ok(ds) => decls.extend(ds),
            Err(e) => errors.push(e.into()),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Project::resolve(decls)
}

fn resolve_type(t: &TypeExpr, symbols: &Symbols) -> Result<SemanticType, String> {
    Ok(match t {
        TypeExpr::Bool => SemanticType::Bool,
        TypeExpr::Range(lo, hi) => SemanticType::IntRange(*lo, *hi),
        TypeExpr::Named(n) if symbols.is_set(n) => SemanticType::Enum(n.clone()),
        TypeExpr::Named(n) => return Err(format!("unknown type `{n}`")),
        TypeExpr::Set(t) => SemanticType::Set(Box::new(resolve_type(t, symbols)?)),
        TypeExpr::Func { dom, cod, total } => SemanticType::Func {
            dom: Box::new(resolve_type(dom, symbols)?),
            cod: Box::new(resolve_type(cod, symbols)?),
            total: *total,
        },
    })
}

fn chain_has_cycle<'a>(start: &'a str, parent: impl Fn(&str) -> Option<&'a str>) -> bool {
    let mut seen = BTreeSet::new();
    let mut cur = Some(start);
    while let Some(c) = cur {
        if !seen.insert(c) {
            return true;
        }
        cur = parent(c);
    }
    false
}

/// Merges an event with the parent event it extends: parent parameters,
/// guards and actions come first.
fn merge_event(parent: &Event, child: Event) -> Event {
    let mut params = parent.params.clone();
    params.extend(child.params);
    let mut guards = parent.guards.clone();
    guards.extend(child.guards);
    let mut actions = parent.actions.clone();
    actions.extend(child.actions);
    Event { name: child.name, params, guards, actions, extends: None, origin: child.origin }
}

fn check_unique_labels<'a>(
    labels: impl Iterator<Item = &'a str>,
    what: &'static str,
    owner: &str,
    origin: &Origin,
) -> Result<(), ResolveError> {
    let mut seen = BTreeSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(ResolveError::Duplicate {
                kind: what,
                name: format!("{owner} @{l}"),
                origin: origin.to_string(),
            });
        }
    }
    Ok(())
}

impl Project {
    fn resolve(decls: Vec<Decl>) -> Result<Project, Vec<ResolveError>> {
        let mut errors = Vec::new();
        let mut ctx_decls: Vec<ContextDecl> = Vec::new();
        let mut machine_decls: Vec<MachineDecl> = Vec::new();
        let mut names: BTreeMap<String, String> = BTreeMap::new();
        for d in decls {
            let (name, origin) = match &d {
                Decl::Context(c) => (c.name.clone(), c.origin.clone()),
                Decl::Machine(m) => (m.name.clone(), m.origin.clone()),
            };
            if names.insert(name.clone(), origin.to_string()).is_some() {
                errors.push(ResolveError::Duplicate { kind: "component", name, origin: origin.to_string() });
                continue;
            }
            match d {
                Decl::Context(c) => ctx_decls.push(c),
                Decl::Machine(m) => machine_decls.push(m),
            }
        }

        // Contexts: links, symbols, constants.
        let ctx_parent: BTreeMap<&str, Option<&str>> =
            ctx_decls.iter().map(|c| (c.name.as_str(), c.extends.as_deref())).collect();
        for c in &ctx_decls {
            if let Some(p) = &c.extends {
                if !ctx_parent.contains_key(p.as_str()) {
                    errors.push(ResolveError::Dangling {
                        kind: "context",
                        name: c.name.clone(),
                        target: p.clone(),
                        origin: c.origin.to_string(),
                    });
                } else if chain_has_cycle(&c.name, |n| ctx_parent.get(n).copied().flatten()) {
                    errors.push(ResolveError::Cycle { kind: "context extends", name: c.name.clone() });
                }
            }
        }
        let mut symbols = Symbols::default();
        let mut global: BTreeMap<String, String> = BTreeMap::new();
        let mut claim = |name: &str, what: &str, origin: &Origin, errors: &mut Vec<ResolveError>| {
            if ["TRUE", "FALSE", "true", "false", "BOOL", "and", "or", "not", "in", "e", "X", "G", "F", "U", "R"]
                .contains(&name)
            {
                errors.push(ResolveError::Invalid {
                    origin: origin.to_string(),
                    message: format!("`{name}` cannot be used as a {what} name"),
                });
            } else if let Some(prev) = global.insert(name.to_string(), what.to_string()) {
                errors.push(ResolveError::Duplicate {
                    kind: "name",
                    name: format!("{name} (already a {prev})"),
                    origin: origin.to_string(),
                });
            }
        };
        for c in &ctx_decls {
            for s in &c.sets {
                claim(&s.name, "set", &c.origin, &mut errors);
                for e in &s.elements {
                    claim(e, "set element", &c.origin, &mut errors);
                }
                symbols.add_set(&s.name, &s.elements);
            }
        }
        let mut contexts = Vec::new();
        for c in &ctx_decls {
            for k in &c.constants {
                claim(&k.name, "constant", &c.origin, &mut errors);
            }
            if let Err(e) = check_unique_labels(c.axioms.iter().map(|a| a.label.as_str()), "axiom", &c.name, &c.origin)
            {
                errors.push(e);
            }
            let mut constants = Vec::new();
            for k in &c.constants {
                match resolve_type(&k.ty, &symbols) {
                    Ok(ty) => constants.push(Constant {
                        name: k.name.clone(),
                        ty,
                        value: k.value.clone(),
                        context: c.name.clone(),
                    }),
                    Err(m) => errors.push(ResolveError::Invalid {
                        origin: c.origin.to_string(),
                        message: format!("constant `{}`: {m}", k.name),
                    }),
                }
            }
            contexts.push(Context {
                name: c.name.clone(),
                extends: c.extends.clone(),
                sets: c.sets.clone(),
                constants,
                axioms: c.axioms.clone(),
                origin: c.origin.clone(),
            });
        }

        let mut project = Project {
            contexts,
            machines: Vec::new(),
            symbols,
            decls: machine_decls.iter().map(|m| (m.name.clone(), m.clone())).collect(),
        };

        // Machines, parents first.
        let parent_of: BTreeMap<&str, Option<&str>> =
            machine_decls.iter().map(|m| (m.name.as_str(), m.refines.as_deref())).collect();
        let mut ok = true;
        for m in &machine_decls {
            if let Some(p) = &m.refines {
                if !parent_of.contains_key(p.as_str()) {
                    errors.push(ResolveError::Dangling {
                        kind: "machine",
                        name: m.name.clone(),
                        target: p.clone(),
                        origin: m.origin.to_string(),
                    });
                    ok = false;
                } else if chain_has_cycle(&m.name, |n| parent_of.get(n).copied().flatten()) {
                    errors.push(ResolveError::Cycle { kind: "machine refines", name: m.name.clone() });
                    ok = false;
                }
            }
            for s in &m.sees {
                if project.context(s).is_none() {
                    errors.push(ResolveError::Dangling {
                        kind: "context",
                        name: m.name.clone(),
                        target: s.clone(),
                        origin: m.origin.to_string(),
                    });
                    ok = false;
                }
            }
        }
        if !errors.is_empty() || !ok {
            return Err(errors);
        }
        let depth = |name: &str| {
            let mut d = 0;
            let mut cur = parent_of.get(name).copied().flatten();
            while let Some(p) = cur {
                d += 1;
                cur = parent_of.get(p).copied().flatten();
            }
            d
        };
        let mut order: Vec<&MachineDecl> = machine_decls.iter().collect();
        // Stable: declaration order within a depth.
        order.sort_by_key(|m| depth(&m.name));
        let mut resolved: BTreeMap<String, Machine> = BTreeMap::new();
        for decl in order {
            let parent = decl.refines.as_ref().map(|p| &resolved[p]);
            match project.resolve_machine(decl, parent) {
                Ok(m) => {
                    resolved.insert(m.name.clone(), m);
                }
                Err(e) => errors.push(e),
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        project.machines = machine_decls.iter().map(|d| resolved.remove(&d.name).expect("resolved")).collect();
        Ok(project)
    }

    fn resolve_machine(&self, decl: &MachineDecl, parent: Option<&Machine>) -> Result<Machine, ResolveError> {
        let origin = decl.origin.to_string();
        let invalid = |message: String| ResolveError::Invalid { origin: origin.clone(), message };
        let ty = |t: &TypeExpr, what: &str| resolve_type(t, &self.symbols).map_err(|m| invalid(format!("{what}: {m}")));

        let mut contexts: Vec<String> = parent.map(|p| p.contexts.clone()).unwrap_or_default();
        for s in &decl.sees {
            for c in self.context_chain(s) {
                if !contexts.contains(&c) {
                    contexts.push(c);
                }
            }
        }

        let mut variables = parent.map(|p| p.variables.clone()).unwrap_or_default();
        for (name, t) in &decl.variables {
            let t = ty(t, &format!("variable `{name}`"))?;
            if self.symbols.lookup(name).is_some() || self.constant(name).is_some() {
                return Err(invalid(format!("variable `{name}` shadows a set, element or constant")));
            }
            match variables.iter().find(|v| &v.name == name) {
                Some(v) if v.ty == t => {}
                Some(v) => {
                    return Err(invalid(format!("variable `{name}` redeclared with type {t}, was {}", v.ty)));
                }
                None => variables.push(Typed { name: name.clone(), ty: t }),
            }
        }

        let mut invariants = parent.map(|p| p.invariants.clone()).unwrap_or_default();
        invariants.extend(decl.invariants.iter().cloned());
        check_unique_labels(invariants.iter().map(|i| i.label.as_str()), "invariant", &decl.name, &decl.origin)?;

        let mut init = parent.map(|p| p.init.clone()).unwrap_or_default();
        for a in decl.init.iter().flatten() {
            match init.iter_mut().find(|x| x.var == a.var) {
                Some(slot) => *slot = a.clone(),
                None => init.push(a.clone()),
            }
        }
        check_unique_labels(init.iter().map(|a| a.label.as_str()), "init action", &decl.name, &decl.origin)?;
        let has_init = decl.init.is_some() || parent.is_some_and(|p| p.has_init);

        let mut events: Vec<Event> = parent.map(|p| p.events.clone()).unwrap_or_default();
        let mut own = BTreeSet::new();
        for e in &decl.events {
            if !own.insert(e.name.as_str()) {
                return Err(ResolveError::Duplicate {
                    kind: "event",
                    name: format!("{}.{}", decl.name, e.name),
                    origin: e.origin.to_string(),
                });
            }
            let flat = self.flatten_decl(decl, parent, e)?;
            for p in &flat.params {
                if variables.iter().any(|v| v.name == p.name) || self.symbols.lookup(&p.name).is_some() {
                    return Err(invalid(format!("parameter `{}` of `{}` shadows another name", p.name, e.name)));
                }
            }
            check_unique_labels(flat.params.iter().map(|p| p.name.as_str()), "parameter", &e.name, &e.origin)?;
            check_unique_labels(flat.guards.iter().map(|g| g.label.as_str()), "guard", &e.name, &e.origin)?;
            check_unique_labels(flat.actions.iter().map(|a| a.label.as_str()), "action", &e.name, &e.origin)?;
            match events.iter_mut().find(|x| x.name == flat.name) {
                Some(slot) => *slot = flat,
                None => events.push(flat),
            }
        }

        Ok(Machine {
            name: decl.name.clone(),
            refines: decl.refines.clone(),
            view_of: None,
            contexts,
            variables,
            invariants,
            init,
            has_init,
            events,
            fixed_constants: Bindings::new(),
            origin: decl.origin.clone(),
        })
    }

    fn flatten_decl(&self, decl: &MachineDecl, parent: Option<&Machine>, e: &EventDecl) -> Result<Event, ResolveError> {
        let mut params = Vec::new();
        for (name, t) in &e.params {
            let ty = resolve_type(t, &self.symbols).map_err(|m| ResolveError::Invalid {
                origin: e.origin.to_string(),
                message: format!("parameter `{name}`: {m}"),
            })?;
            params.push(Typed { name: name.clone(), ty });
        }
        let own = Event {
            name: e.name.clone(),
            params,
            guards: e.guards.clone(),
            actions: e.actions.clone(),
            extends: e.extends.clone(),
            origin: e.origin.clone(),
        };
        let Some(target) = &e.extends else {
            return Ok(own);
        };
        let base = parent.and_then(|p| p.event(target)).ok_or_else(|| ResolveError::Dangling {
            kind: "event",
            name: format!("{}.{}", decl.name, e.name),
            target: target.clone(),
            origin: e.origin.to_string(),
        })?;
        Ok(merge_event(base, own))
    }

    /// `name` preceded by all contexts it extends, root first.
    fn context_chain(&self, name: &str) -> Vec<String> {
        let mut chain = Vec::new();
        let mut cur = Some(name.to_string());
        while let Some(c) = cur {
            cur = self.context(&c).and_then(|x| x.extends.clone());
            chain.push(c);
        }
        chain.reverse();
        chain
    }

    pub fn context(&self, name: &str) -> Option<&Context> {
        self.contexts.iter().find(|c| c.name == name)
    }

    pub fn machine(&self, name: &str) -> Option<&Machine> {
        self.machines.iter().find(|m| m.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&Constant> {
        self.contexts.iter().flat_map(|c| &c.constants).find(|k| k.name == name)
    }

    /// Constants visible to a machine, in context order.
    pub fn visible_constants<'a>(&'a self, machine: &'a Machine) -> impl Iterator<Item = &'a Constant> + 'a {
        machine.contexts.iter().filter_map(|c| self.context(c)).flat_map(|c| &c.constants)
    }

    pub fn visible_axioms<'a>(&'a self, machine: &'a Machine) -> impl Iterator<Item = (&'a Context, &'a Labeled<Expr>)> + 'a {
        machine
            .contexts
            .iter()
            .filter_map(|c| self.context(c))
            .flat_map(|c| c.axioms.iter().map(move |a| (c, a)))
    }

    /// Machines above `name` in the refinement chain, nearest first.
    pub fn ancestors(&self, name: &str) -> Vec<&Machine> {
        let mut out = Vec::new();
        let mut cur = self.machine(name).and_then(|m| m.refines.as_deref());
        while let Some(p) = cur {
            match self.machine(p) {
                Some(m) => {
                    out.push(m);
                    cur = m.refines.as_deref();
                }
                None => break,
            }
        }
        out
    }

    /// Machines refining `name` directly or transitively, with their distance,
    /// ordered by distance then declaration order.
    pub fn descendants(&self, name: &str) -> Vec<(&Machine, usize)> {
        let mut out: Vec<(&Machine, usize)> = self
            .machines
            .iter()
            .filter_map(|m| {
                self.ancestors(&m.name).iter().position(|a| a.name == name).map(|d| (m, d + 1))
            })
            .collect();
        out.sort_by_key(|(_, d)| *d);
        out
    }

    pub fn refines_transitively(&self, concrete: &str, abstract_: &str) -> bool {
        self.ancestors(concrete).iter().any(|m| m.name == abstract_)
    }

    /// Adds a derived machine, e.g. one produced by a view.
    pub fn register_machine(&mut self, machine: Machine) -> Result<(), ResolveError> {
        if self.machine(&machine.name).is_some() || self.context(&machine.name).is_some() {
            return Err(ResolveError::Duplicate {
                kind: "component",
                name: machine.name.clone(),
                origin: machine.origin.to_string(),
            });
        }
        self.machines.push(machine);
        Ok(())
    }

    /// The declared event `event` of `machine` with every inherited guard,
    /// parameter and action of its `extends` chain prepended, parent first.
    pub fn flatten_event(&self, machine: &str, event: &str) -> Result<Event, ResolveError> {
        let decl = self.decls.get(machine).ok_or_else(|| ResolveError::Dangling {
            kind: "machine",
            name: machine.to_string(),
            target: machine.to_string(),
            origin: String::new(),
        })?;
        let Some(e) = decl.events.iter().find(|e| e.name == event) else {
            // Inherited without redeclaration: already flat.
            return self
                .machine(machine)
                .and_then(|m| m.event(event))
                .cloned()
                .ok_or_else(|| ResolveError::Dangling {
                    kind: "event",
                    name: machine.to_string(),
                    target: event.to_string(),
                    origin: decl.origin.to_string(),
                });
        };
        let parent = decl.refines.as_deref().and_then(|p| self.machine(p));
        self.flatten_decl(decl, parent, e)
    }

    /// Deferred constants `machine` depends on: those it mentions, closed
    /// under sharing an axiom.
    pub fn referenced_deferred<'a>(&'a self, machine: &'a Machine) -> Vec<&'a Constant> {
        let deferred: Vec<&Constant> = self
            .visible_constants(machine)
            .filter(|k| k.value.is_none() && !machine.fixed_constants.contains_key(&k.name))
            .collect();
        let is_deferred = |n: &str| deferred.iter().any(|k| k.name == n);
        let mut used: BTreeSet<String> = BTreeSet::new();
        for e in machine.expressions() {
            e.for_each_ident(&mut |n| {
                if is_deferred(n) {
                    used.insert(n.to_string());
                }
            });
        }
        // Concrete constant definitions may mention deferred ones.
        let mut changed = true;
        while changed {
            changed = false;
            let axioms = self.visible_axioms(machine).map(|(_, a)| &a.item);
            let defs = self.visible_constants(machine).filter_map(|k| k.value.as_ref());
            for e in axioms.chain(defs) {
                let mut names = Vec::new();
                e.for_each_ident(&mut |n| {
                    if is_deferred(n) {
                        names.push(n.to_string());
                    }
                });
                if names.iter().any(|n| used.contains(n)) {
                    for n in names {
                        changed |= used.insert(n);
                    }
                }
            }
        }
        deferred.into_iter().filter(|k| used.contains(&k.name)).collect()
    }

    /// Every valuation of the deferred constants `machine` depends on that
    /// satisfies the applicable axioms, in enumeration order.
    pub fn universes(&self, machine: &Machine) -> Result<Vec<Universe>, UniverseError> {
        let deferred = self.referenced_deferred(machine);
        let deferred_names: BTreeSet<&str> = deferred.iter().map(|k| k.name.as_str()).collect();
        let mut domains = Vec::new();
        let mut total: u128 = 1;
        for k in &deferred {
            let vs = k.ty.enumerate(&self.symbols, MAX_DOMAIN)?;
            total = total.saturating_mul(vs.len() as u128);
            if total > MAX_UNIVERSES {
                return Err(UniverseError::TooMany { machine: machine.name.clone(), limit: MAX_UNIVERSES });
            }
            domains.push(vs);
        }
        let all_deferred: BTreeSet<&str> = self
            .visible_constants(machine)
            .filter(|k| k.value.is_none() && !machine.fixed_constants.contains_key(&k.name))
            .map(|k| k.name.as_str())
            .collect();
        // Axioms that only mention enumerated, pinned or concrete constants.
        let axioms: Vec<&Expr> = self
            .visible_axioms(machine)
            .map(|(_, a)| &a.item)
            .filter(|e| {
                let mut ok = true;
                e.for_each_ident(&mut |n| {
                    if all_deferred.contains(n) && !deferred_names.contains(n) {
                        ok = false;
                    }
                });
                ok
            })
            .collect();

        let mut out = Vec::new();
        let mut digits = vec![0usize; deferred.len()];
        loop {
            let mut constants = machine.fixed_constants.clone();
            for (k, (&d, dom)) in deferred.iter().zip(digits.iter().zip(&domains)) {
                constants.insert(k.name.clone(), dom[d].clone());
            }
            let mut consistent = true;
            for k in self.visible_constants(machine) {
                if let (Some(v), false) = (&k.value, machine.fixed_constants.contains_key(&k.name)) {
                    match eval_expr(v, &Scope::new(&self.symbols).with(&constants)) {
                        Ok(val) => {
                            constants.insert(k.name.clone(), k.ty.coerce(val));
                        }
                        Err(EvalFault::Unbound(n)) if all_deferred.contains(n.as_str()) => {
                            consistent = false;
                            break;
                        }
                        Err(fault) => return Err(UniverseError::Constant { name: k.name.clone(), fault }),
                    }
                }
            }
            if consistent {
                let scope = Scope::new(&self.symbols).with(&constants);
                let holds = axioms.iter().all(|a| matches!(eval_expr(a, &scope), Ok(Value::Bool(true))));
                if holds {
                    let id = if deferred.is_empty() {
                        "default".to_string()
                    } else {
                        deferred.iter().map(|k| format!("{}={}", k.name, constants[&k.name])).collect::<Vec<_>>().join("; ")
                    };
                    out.push(Universe { id, constants });
                }
            }
            let mut pos = digits.len();
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < domains[pos].len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }
}
