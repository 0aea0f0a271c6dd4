//! Scenario views: machines derived from a base machine by pinning deferred
//! constants or replacing init actions with concrete values.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::error::{EvalFault, ParseError};
use crate::explore::{explore, Limits, StateGraph, Trace};
use crate::model::ast::{Expr, Origin};
use crate::model::eval::{eval_expr, Scope};
use crate::model::lexer::{Sym, TokenKind};
use crate::model::parser::Parser;
use crate::model::project::{Machine, Project};
use crate::model::semantics::Semantics;
use crate::model::typeck::TyEnv;
use crate::model::value::{Bindings, Value};
use crate::vo::{run_vo, GraphCache, RunOptions, Status, Technique, Vo, VoResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum BindTarget {
    /// A labelled action of the init block.
    InitAction(String),
    /// A deferred constant.
    Constant(String),
}

impl std::fmt::Display for BindTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BindTarget::InitAction(l) => write!(f, "INITIALISATION.@{l}"),
            BindTarget::Constant(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViewBinding {
    pub target: BindTarget,
    pub expr: Expr,
}

/// A VO attached to a view, run on every scenario built the same way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateVo {
    pub requirement: String,
    pub technique: Technique,
    pub params: String,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViewSpec {
    pub name: String,
    pub base: String,
    /// Recipe view whose binding shape this view instantiates.
    pub follows: Option<String>,
    pub bindings: Vec<ViewBinding>,
    pub templates: Vec<TemplateVo>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedMachine {
    pub machine: Machine,
    pub spec: ViewSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViewError {
    #[error("view `{view}`: unknown base machine `{base}`")]
    UnknownBase { view: String, base: String },
    #[error("view `{0}`: a machine or context with that name already exists")]
    NameCollision(String),
    #[error("view `{view}`: `{target}` {reason}")]
    BadTarget { view: String, target: String, reason: String },
    #[error("view `{view}`: binding of `{target}`: {message}")]
    Type { view: String, target: String, message: String },
    #[error("view `{view}`: axiom @{axiom} of `{context}` does not hold for the bound values")]
    AxiomViolated { view: String, context: String, axiom: String },
    #[error("view `{view}`: {message}")]
    Shape { view: String, message: String },
    #[error("state space of `{0}` was truncated; inclusion cannot be decided")]
    Truncated(String),
    #[error("{0}")]
    Semantics(String),
}

// ---- parsing ---------------------------------------------------------------

/// Splits template clauses out of the text, blanking them so that token
/// positions are preserved. A clause runs from `template` to the end of its
/// line, minus a trailing `end` which stays in place.
fn extract_templates(file: &str, text: &str) -> (String, Vec<(usize, TemplateVo)>, Vec<ParseError>) {
    let mut blanked = String::with_capacity(text.len());
    let mut found = Vec::new();
    let mut errors = Vec::new();
    let mut offset = 0;
    for (lineno, line) in text.split_inclusive('\n').enumerate() {
        let content = line.trim_end_matches(['\n', '\r']);
        let code = match content.find(['#']).or_else(|| content.find("//")) {
            Some(c) => &content[..c],
            None => content,
        };
        let at = code.match_indices("template").map(|(i, _)| i).find(|&i| {
            let before = code[..i].chars().next_back();
            let after = code[i + 8..].chars().next();
            !before.is_some_and(|c| c.is_alphanumeric() || c == '_')
                && !after.is_some_and(|c| c.is_alphanumeric() || c == '_')
        });
        let Some(at) = at else {
            blanked.push_str(line);
            offset += line.len();
            continue;
        };
        let mut clause = content[at + 8..].trim_end();
        let mut keep_end = None;
        if let Some(rest) = clause.strip_suffix("end") {
            if rest.is_empty() || rest.ends_with(char::is_whitespace) {
                keep_end = Some(at + 8 + rest.len());
                clause = rest.trim_end();
            }
        }
        let col = (content[..at].chars().count() + 1) as u32;
        match parse_template(clause) {
            Ok((requirement, technique, params)) => found.push((
                offset + at,
                TemplateVo { requirement, technique, params, origin: Origin { file: file.into(), line: lineno as u32 + 1 } },
            )),
            Err(m) => errors.push(ParseError::new(file, lineno as u32 + 1, col, m)),
        }
        let mut replaced: String = content[..at].to_string();
        for (i, c) in content[at..].char_indices() {
            let pos = at + i;
            if keep_end.is_some_and(|k| pos >= k && pos < k + 3) {
                replaced.push(c);
            } else {
                replaced.extend(std::iter::repeat_n(' ', c.len_utf8()));
            }
        }
        replaced.push_str(&line[content.len()..]);
        blanked.push_str(&replaced);
        offset += line.len();
    }
    (blanked, found, errors)
}

/// `[VO] REQ / TECHNIQUE / PARAMS`.
fn parse_template(clause: &str) -> Result<(String, Technique, String), String> {
    let clause = clause.trim();
    let clause = clause.strip_prefix("VO").filter(|r| r.starts_with(char::is_whitespace)).unwrap_or(clause);
    let mut parts = clause.splitn(3, '/');
    let req = parts.next().unwrap_or("").trim();
    let tech = parts.next().ok_or("expected `REQ / TECHNIQUE / PARAMETERS` after `template`")?.trim();
    let params = parts.next().ok_or("expected `/` after the technique")?.trim();
    if req.is_empty() || !req.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(format!("`{req}` is not a valid requirement id"));
    }
    let technique = Technique::parse(tech).ok_or_else(|| format!("unknown technique `{tech}`"))?;
    Ok((req.to_string(), technique, params.to_string()))
}

fn parse_target(p: &mut Parser) -> Result<BindTarget, ParseError> {
    if (p.is_kw("INITIALISATION") || p.is_kw("init")) && matches!(p.peek_at(1).kind, TokenKind::Sym(Sym::Dot)) {
        p.bump();
        p.bump();
        return match p.bump().kind {
            TokenKind::Label(l) => Ok(BindTarget::InitAction(l)),
            _ => Err(p.error_here("expected an action label such as `@act1`")),
        };
    }
    Ok(BindTarget::Constant(p.expect_ident("a constant or `INITIALISATION.@label`")?))
}

pub fn parse_view_file(file: &str, text: &str) -> Result<Vec<ViewSpec>, ParseError> {
    let (blanked, templates, errors) = extract_templates(file, text);
    if let Some(e) = errors.into_iter().next() {
        return Err(e);
    }
    let mut p = Parser::new(file, &blanked)?;
    let mut views: Vec<(usize, usize, ViewSpec)> = Vec::new();
    while !p.at_eof() {
        let start = p.expect_kw("view")?;
        let name = p.expect_ident("a view name")?;
        p.expect_kw("of")?;
        let base = p.expect_ident("a base machine")?;
        let follows = if p.eat_kw("follows") { Some(p.expect_ident("a recipe view")?) } else { None };
        let mut bindings = Vec::new();
        if p.eat_kw("bind") {
            while !p.is_kw("end") && !p.at_eof() {
                let target = parse_target(&mut p)?;
                p.expect_sym(Sym::Assign)?;
                let expr = p.parse_expr()?;
                bindings.push(ViewBinding { target, expr });
                p.eat_sym(Sym::Comma);
            }
        }
        let end = p.expect_kw("end")?;
        if views.iter().any(|(_, _, v)| v.name == name) {
            return Err(ParseError::new(file, start.line, start.col, format!("duplicate view `{name}`")));
        }
        let origin = Origin { file: file.into(), line: start.line };
        views.push((start.offset, end.end, ViewSpec { name, base, follows, bindings, templates: Vec::new(), origin }));
    }
    for (at, t) in templates {
        match views.iter_mut().find(|(s, e, _)| *s <= at && at < *e) {
            Some((_, _, v)) => v.templates.push(t),
            None => return Err(ParseError::new(file, t.origin.line, 1, "`template` outside a view")),
        }
    }
    Ok(views.into_iter().map(|(_, _, v)| v).collect())
}

// ---- application -----------------------------------------------------------

/// Constants with a known value given the pinned ones: concrete constants
/// whose definitions evaluate, plus `fixed`.
fn known_constants(project: &Project, machine: &Machine, fixed: &Bindings) -> Bindings {
    let mut known = fixed.clone();
    for k in project.visible_constants(machine) {
        if let (Some(v), false) = (&k.value, known.contains_key(&k.name)) {
            if let Ok(val) = eval_expr(v, &Scope::new(&project.symbols).with(&known)) {
                known.insert(k.name.clone(), k.ty.coerce(val));
            }
        }
    }
    known
}

/// Builds the derived machine of `spec` without registering it.
pub fn derive_machine(project: &Project, spec: &ViewSpec) -> Result<DerivedMachine, ViewError> {
    let view = spec.name.clone();
    let base = project
        .machine(&spec.base)
        .ok_or_else(|| ViewError::UnknownBase { view: view.clone(), base: spec.base.clone() })?;
    if project.machine(&spec.name).is_some() || project.context(&spec.name).is_some() {
        return Err(ViewError::NameCollision(view));
    }
    let deferred: Vec<_> = project.visible_constants(base).filter(|k| k.value.is_none()).collect();
    let is_deferred = |n: &str| deferred.iter().any(|k| k.name == n);
    let env = TyEnv::for_machine(project, base, false);
    let mut m = base.clone();
    m.name = spec.name.clone();
    m.refines = None;
    m.view_of = Some(base.name.clone());
    m.origin = spec.origin.clone();

    let bad = |target: &BindTarget, reason: &str| ViewError::BadTarget {
        view: view.clone(),
        target: target.to_string(),
        reason: reason.to_string(),
    };
    let type_error = |target: &BindTarget, message: String| ViewError::Type { view: view.clone(), target: target.to_string(), message };

    let mut seen = BTreeSet::new();
    for b in &spec.bindings {
        if !seen.insert(b.target.to_string()) {
            return Err(bad(&b.target, "is bound twice"));
        }
        if let BindTarget::Constant(name) = &b.target {
            let Some(k) = deferred.iter().find(|k| &k.name == name) else {
                return Err(bad(&b.target, "is not a deferred constant visible to the base machine"));
            };
            if m.fixed_constants.contains_key(name) {
                return Err(bad(&b.target, "is already fixed by the base machine"));
            }
            env.check_assign(&k.ty, &b.expr).map_err(|e| type_error(&b.target, e))?;
            let known = known_constants(project, &m, &m.fixed_constants);
            let v = eval_expr(&b.expr, &Scope::new(&project.symbols).with(&known))
                .map_err(|f| type_error(&b.target, format!("cannot evaluate `{}`: {f}", b.expr)))?;
            let v = k.ty.coerce(v);
            if !k.ty.contains(&v, &project.symbols) {
                return Err(type_error(&b.target, format!("value {v} is outside {}", k.ty)));
            }
            m.fixed_constants.insert(name.clone(), v);
        }
    }
    let known = known_constants(project, &m, &m.fixed_constants);
    for b in &spec.bindings {
        if let BindTarget::InitAction(label) = &b.target {
            let Some(action) = m.init.iter_mut().find(|a| &a.label == label) else {
                return Err(bad(&b.target, "is not an init action of the base machine"));
            };
            let mut mentions_deferred = false;
            action.expr.for_each_ident(&mut |n| mentions_deferred |= is_deferred(n));
            if !mentions_deferred {
                return Err(bad(&b.target, "does not depend on a deferred constant, so a view may not replace it"));
            }
            let ty = &base.variable(&action.var).expect("init assigns a variable").ty;
            env.check_assign(ty, &b.expr).map_err(|e| type_error(&b.target, e))?;
            match eval_expr(&b.expr, &Scope::new(&project.symbols).with(&known)) {
                Ok(v) => {
                    let v = ty.coerce(v);
                    if !ty.contains(&v, &project.symbols) {
                        return Err(type_error(&b.target, format!("value {v} is outside {}", ty)));
                    }
                }
                Err(EvalFault::Unbound(n)) if is_deferred(&n) => {}
                Err(f) => return Err(type_error(&b.target, format!("cannot evaluate `{}`: {f}", b.expr))),
            }
            action.expr = b.expr.clone();
        }
    }

    // Axioms decidable from the pinned values must hold.
    let known = known_constants(project, &m, &m.fixed_constants);
    for (ctx, axiom) in project.visible_axioms(&m) {
        match eval_expr(&axiom.item, &Scope::new(&project.symbols).with(&known)) {
            Ok(Value::Bool(true)) => {}
            Err(EvalFault::Unbound(n)) if is_deferred(&n) => {}
            _ => {
                return Err(ViewError::AxiomViolated { view, context: ctx.name.clone(), axiom: axiom.label.clone() })
            }
        }
    }
    Ok(DerivedMachine { machine: m, spec: spec.clone() })
}

/// Derives the view's machine and registers it. The base machine and every
/// other machine are left untouched.
pub fn apply_view(project: &mut Project, spec: &ViewSpec) -> Result<DerivedMachine, ViewError> {
    let derived = derive_machine(project, spec)?;
    project.register_machine(derived.machine.clone()).map_err(|_| ViewError::NameCollision(spec.name.clone()))?;
    Ok(derived)
}

// ---- trace inclusion -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InclusionVerdict {
    pub holds: bool,
    /// Shortest trace of the derived machine no base universe admits.
    pub counterexample: Option<Trace>,
    pub universe_id: Option<String>,
    /// Product states visited.
    pub explored: usize,
}

fn graphs(project: &Project, machine: &Machine, limits: Limits) -> Result<Vec<StateGraph>, ViewError> {
    let universes = project.universes(machine).map_err(|e| ViewError::Semantics(e.to_string()))?;
    let mut out = Vec::new();
    for u in &universes {
        let sem = Semantics::new(project, machine, u).map_err(|e| ViewError::Semantics(e.to_string()))?;
        let g = explore(&sem, limits).map_err(|e| ViewError::Semantics(e.to_string()))?;
        if g.truncated {
            return Err(ViewError::Truncated(machine.name.clone()));
        }
        out.push(g);
    }
    Ok(out)
}

/// Whether every event sequence of the derived machine is a sequence of
/// some universe of its base. Determinises the base over all universes at
/// once and searches breadth first, so a counterexample is shortest.
pub fn check_view_refines_base(project: &Project, derived: &str, limits: Limits) -> Result<InclusionVerdict, ViewError> {
    let d = project.machine(derived).ok_or_else(|| ViewError::UnknownBase { view: derived.into(), base: derived.into() })?;
    let base_name = d.view_of.as_ref().ok_or_else(|| ViewError::Shape {
        view: derived.into(),
        message: "is not a view-derived machine".into(),
    })?;
    let b = project
        .machine(base_name)
        .ok_or_else(|| ViewError::UnknownBase { view: derived.into(), base: base_name.clone() })?;
    let dgs = graphs(project, d, limits)?;
    let bgs = graphs(project, b, limits)?;
    let mut explored = 0;

    for dg in &dgs {
        type Node = (usize, Vec<(usize, usize)>);
        let start: Vec<(usize, usize)> =
            bgs.iter().enumerate().flat_map(|(u, g)| g.initial.iter().map(move |&s| (u, s))).collect();
        let mut index: HashMap<Node, usize> = HashMap::new();
        let mut nodes: Vec<Node> = Vec::new();
        let mut parent: Vec<Option<(usize, usize)>> = Vec::new();
        let mut queue = VecDeque::new();
        for &s in &dg.initial {
            let node = (s, start.clone());
            if !index.contains_key(&node) {
                index.insert(node.clone(), nodes.len());
                queue.push_back(nodes.len());
                nodes.push(node);
                parent.push(None);
            }
        }
        while let Some(n) = queue.pop_front() {
            explored += 1;
            let (ds, set) = nodes[n].clone();
            for &t in &dg.outgoing[ds] {
                let e = &dg.transitions[t];
                if e.synthetic {
                    continue;
                }
                let mut next: Vec<(usize, usize)> = Vec::new();
                for &(u, bs) in &set {
                    for &bt in &bgs[u].outgoing[bs] {
                        let be = &bgs[u].transitions[bt];
                        if !be.synthetic && be.event == e.event && be.binding == e.binding {
                            next.push((u, be.dst));
                        }
                    }
                }
                next.sort_unstable();
                next.dedup();
                if next.is_empty() {
                    let mut edges = vec![t];
                    let mut cur = n;
                    while let Some((p, pt)) = parent[cur] {
                        edges.push(pt);
                        cur = p;
                    }
                    edges.reverse();
                    let trace = dg.trace_along(nodes[cur].0, &edges);
                    return Ok(InclusionVerdict {
                        holds: false,
                        counterexample: Some(trace),
                        universe_id: Some(dg.universe_id.clone()),
                        explored,
                    });
                }
                let node = (e.dst, next);
                if !index.contains_key(&node) {
                    index.insert(node.clone(), nodes.len());
                    queue.push_back(nodes.len());
                    nodes.push(node);
                    parent.push(Some((n, t)));
                }
            }
        }
    }
    Ok(InclusionVerdict { holds: true, counterexample: None, universe_id: None, explored })
}

// ---- templates -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateAggregate {
    pub requirement: String,
    pub status: Status,
    /// No scenario instantiates the recipe, so the PASS is empty.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateRun {
    pub results: Vec<VoResult>,
    pub aggregates: Vec<TemplateAggregate>,
}

/// Runs each template VO of `recipe` on every scenario. Scenarios must bind
/// exactly the recipe's targets on the same base machine; they are derived
/// and registered in `project` if not already present.
pub fn run_template_vos(
    project: &mut Project,
    recipe: &ViewSpec,
    scenarios: &[ViewSpec],
    opts: &RunOptions,
) -> Result<TemplateRun, ViewError> {
    let shape: BTreeSet<String> = recipe.bindings.iter().map(|b| b.target.to_string()).collect();
    for s in scenarios {
        let own: BTreeSet<String> = s.bindings.iter().map(|b| b.target.to_string()).collect();
        if s.base != recipe.base {
            let message = format!("is built on `{}` but recipe `{}` is built on `{}`", s.base, recipe.name, recipe.base);
            return Err(ViewError::Shape { view: s.name.clone(), message });
        }
        if own != shape {
            let missing: Vec<_> = shape.difference(&own).cloned().collect();
            let extra: Vec<_> = own.difference(&shape).cloned().collect();
            let message = format!(
                "does not match the binding shape of `{}` (missing: [{}], extra: [{}])",
                recipe.name,
                missing.join(", "),
                extra.join(", ")
            );
            return Err(ViewError::Shape { view: s.name.clone(), message });
        }
    }
    for s in scenarios {
        match project.machine(&s.name) {
            Some(m) if m.view_of.as_deref() == Some(s.base.as_str()) => {}
            Some(_) => return Err(ViewError::NameCollision(s.name.clone())),
            None => {
                apply_view(project, s)?;
            }
        }
    }
    let cache = GraphCache::new();
    let mut results = Vec::new();
    let mut aggregates = Vec::new();
    for t in &recipe.templates {
        let mut status = Status::Pass;
        for s in scenarios {
            let vo = Vo {
                requirement: t.requirement.clone(),
                machine: s.name.clone(),
                technique: t.technique,
                params: t.params.clone(),
                origin: t.origin.clone(),
            };
            let r = run_vo(project, &vo, &cache, opts);
            status = status.max(r.status);
            results.push(r);
        }
        aggregates.push(TemplateAggregate { requirement: t.requirement.clone(), status, vacuous: scenarios.is_empty() });
    }
    Ok(TemplateRun { results, aggregates })
}

// ---- generated source ------------------------------------------------------

/// Source text of a derived machine. Pinned constants have no machine
/// syntax and are listed in the header comment.
pub fn machine_source(project: &Project, m: &Machine) -> String {
    let mut out = String::new();
    if let Some(base) = &m.view_of {
        let _ = writeln!(out, "// generated from view {} of {base}", m.name);
    }
    for (k, v) in &m.fixed_constants {
        let _ = writeln!(out, "// fixed constant {k} = {v}");
    }
    // Only the most specific contexts; the rest are seen through them.
    let sees: Vec<&String> = m
        .contexts
        .iter()
        .filter(|c| {
            !m.contexts.iter().any(|other| {
                let mut cur = project.context(other).and_then(|x| x.extends.as_deref());
                while let Some(p) = cur {
                    if p == c.as_str() {
                        return true;
                    }
                    cur = project.context(p).and_then(|x| x.extends.as_deref());
                }
                false
            })
        })
        .collect();
    let _ = write!(out, "machine {}", m.name);
    if !sees.is_empty() {
        let _ = write!(out, " sees {}", sees.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "));
    }
    out.push('\n');
    if !m.variables.is_empty() {
        let _ = writeln!(out, "variables");
        for v in &m.variables {
            let _ = writeln!(out, "  {} : {}", v.name, v.ty);
        }
    }
    if !m.invariants.is_empty() {
        let _ = writeln!(out, "invariants");
        for i in &m.invariants {
            let _ = writeln!(out, "  @{} {}", i.label, i.item);
        }
    }
    if m.has_init {
        let _ = writeln!(out, "init");
        for a in &m.init {
            let _ = writeln!(out, "  @{} {} := {}", a.label, a.var, a.expr);
        }
        let _ = writeln!(out, "end");
    }
    for e in &m.events {
        let _ = writeln!(out, "event {}", e.name);
        if !e.params.is_empty() {
            let _ = writeln!(out, "  any {}", e.params.iter().map(|p| format!("{} : {}", p.name, p.ty)).collect::<Vec<_>>().join(", "));
        }
        if !e.guards.is_empty() {
            let _ = writeln!(out, "  where");
            for g in &e.guards {
                let _ = writeln!(out, "    @{} {}", g.label, g.item);
            }
        }
        if !e.actions.is_empty() {
            let _ = writeln!(out, "  then");
            for a in &e.actions {
                let _ = writeln!(out, "    @{} {} := {}", a.label, a.var, a.expr);
            }
        }
        let _ = writeln!(out, "end");
    }
    let _ = writeln!(out, "end");
    out
}
