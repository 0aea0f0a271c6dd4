//! Executing VOs: per-universe dispatch to the checking techniques,
//! verdict aggregation and inheritance along refinement chains.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use serde::Serialize;

use super::{Technique, Vo};
use crate::explore::{check_trace, explore, parse_steps, ExploreError, Limits, StateGraph, StepSpec, Trace, TraceError};
use crate::ltl::{self, parse_ltl, Lasso, Ltl, LtlError};
use crate::model::ast::Expr;
use crate::model::project::{Machine, Project, Universe};
use crate::model::semantics::Semantics;
use crate::po::{self, PoError, PoMode, Witness, INDUCTIVE_BOUND};

/// Ordered by severity: aggregation keeps the worst status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Refused,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Refused => "REFUSED",
            Status::Error => "ERROR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Trace { trace: Trace },
    Lasso { lasso: Lasso },
    Witness { witness: Witness },
    /// A requested trace the model does not admit.
    Refusal { message: String, trace: Trace },
    Diagnostic {
        message: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        trace: Option<Trace>,
    },
}

impl Evidence {
    pub fn diagnostic(message: impl Into<String>) -> Self {
        Evidence::Diagnostic { message: message.into(), trace: None }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Evidence::Trace { .. } => "trace",
            Evidence::Lasso { .. } => "lasso",
            Evidence::Witness { .. } => "witness",
            Evidence::Refusal { .. } => "refusal",
            Evidence::Diagnostic { .. } => "diagnostic",
        }
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        match self {
            Evidence::Trace { trace } => format!("trace [{}]", trace.events().join(", ")),
            Evidence::Lasso { lasso } => {
                format!("lasso [{}] then loop [{}]", lasso.prefix.events().join(", "), lasso.cycle.events().join(", "))
            }
            Evidence::Witness { witness } => match witness {
                Witness::Reachable { state, trace } => format!("reachable {state} via [{}]", trace.events().join(", ")),
                Witness::Init { state } => format!("initial state {state}"),
                Witness::Step { pre, event, binding, post, .. } => {
                    format!("{pre} --{}--> {post}", crate::explore::event_label(event, binding))
                }
            },
            Evidence::Refusal { message, .. } | Evidence::Diagnostic { message, .. } => message.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UniverseResult {
    pub id: String,
    pub status: Status,
    pub evidence: Option<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VoResult {
    /// The obligation as executed; for inherited results `machine` is the
    /// refining machine.
    pub vo: Vo,
    /// Machine the VO was declared on, when this is an inherited run.
    pub inherited_from: Option<String>,
    pub status: Status,
    /// Evidence of the first universe with the aggregate status, or a
    /// diagnostic when no universe was checked.
    pub evidence: Option<Evidence>,
    pub universes: Vec<UniverseResult>,
    pub wall_time_ms: Option<u64>,
}

impl VoResult {
    pub fn inherited(&self) -> bool {
        self.inherited_from.is_some()
    }

    fn error(vo: Vo, inherited_from: Option<String>, message: String) -> Self {
        VoResult {
            vo,
            inherited_from,
            status: Status::Error,
            evidence: Some(Evidence::diagnostic(message)),
            universes: Vec::new(),
            wall_time_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub limits: Limits,
    /// PO mode when the parameters do not name one.
    pub inductive_default: bool,
    pub inductive_bound: u128,
    /// Record wall-clock times. Off by default so reports are reproducible.
    pub timings: bool,
    /// Only run VOs of this requirement.
    pub only: Option<String>,
    /// Worker threads for `run_all`; 0 picks the available parallelism.
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            limits: Limits::default(),
            inductive_default: false,
            inductive_bound: INDUCTIVE_BOUND,
            timings: false,
            only: None,
            threads: 0,
        }
    }
}

type GraphKey = (String, String, usize, Option<usize>);
type Slot<T> = Arc<OnceLock<T>>;

/// Explored graphs per (machine, universe, limits), each computed once even
/// under concurrent requests.
#[derive(Default)]
pub struct GraphCache {
    disabled: bool,
    graphs: Mutex<HashMap<GraphKey, Slot<Result<Arc<StateGraph>, ExploreError>>>>,
    universes: Mutex<HashMap<String, Slot<Result<Arc<Vec<Universe>>, String>>>>,
}

impl GraphCache {
    pub fn new() -> Self {
        GraphCache::default()
    }

    /// A cache that recomputes everything; results must not differ.
    pub fn uncached() -> Self {
        GraphCache { disabled: true, ..GraphCache::default() }
    }

    pub fn universes(&self, project: &Project, machine: &Machine) -> Result<Arc<Vec<Universe>>, String> {
        let compute = || project.universes(machine).map(Arc::new).map_err(|e| e.to_string());
        if self.disabled {
            return compute();
        }
        let slot = self.universes.lock().expect("cache lock").entry(machine.name.clone()).or_default().clone();
        slot.get_or_init(compute).clone()
    }

    pub fn graph(&self, sem: &Semantics, limits: Limits) -> Result<Arc<StateGraph>, ExploreError> {
        let compute = || explore(sem, limits).map(Arc::new);
        if self.disabled {
            return compute();
        }
        let key = (sem.machine.name.clone(), sem.universe.id.clone(), limits.max_states, limits.max_depth);
        let slot = self.graphs.lock().expect("cache lock").entry(key).or_default().clone();
        slot.get_or_init(compute).clone()
    }
}

enum Task {
    Po(Expr, PoMode),
    Ltl(Ltl),
    Trace(Vec<StepSpec>),
}

/// Parses and typechecks the parameters against the target machine.
fn prepare(project: &Project, machine: &Machine, vo: &Vo, opts: &RunOptions) -> Result<Task, String> {
    match vo.technique {
        Technique::Po => {
            let (p, mode) = po::parse_po_params(&vo.params).map_err(|e| format!("parameters: {e}"))?;
            po::validate(project, machine, &p).map_err(|e| e.to_string())?;
            let default = if opts.inductive_default { PoMode::Inductive } else { PoMode::Reachable };
            Ok(Task::Po(p, mode.unwrap_or(default)))
        }
        Technique::Ltl => {
            let f = parse_ltl(&vo.params).map_err(|e| format!("parameters: {e}"))?;
            ltl::validate(project, machine, &f).map_err(|e| e.to_string())?;
            Ok(Task::Ltl(f))
        }
        Technique::Trace => {
            let steps = parse_steps(&vo.params).map_err(|e| format!("parameters: {e}"))?;
            for s in &steps {
                if machine.event(&s.event).is_none() {
                    return Err(format!("`{}` has no event `{}`", machine.name, s.event));
                }
            }
            Ok(Task::Trace(steps))
        }
    }
}

fn explore_failure(e: ExploreError) -> UniverseResult {
    UniverseResult {
        id: String::new(),
        status: Status::Error,
        evidence: Some(Evidence::Diagnostic { message: format!("exploration failed: {}", e.error), trace: e.trace }),
    }
}

fn run_universe(sem: &Semantics, task: &Task, cache: &GraphCache, opts: &RunOptions) -> UniverseResult {
    let diag = |status: Status, message: String| UniverseResult {
        id: String::new(),
        status,
        evidence: Some(Evidence::diagnostic(message)),
    };
    let graph = || cache.graph(sem, opts.limits);
    match task {
        Task::Po(p, mode) => {
            let verdict = match mode {
                PoMode::Reachable => match graph() {
                    Ok(g) => po::check_reachable(sem, &g, p),
                    Err(e) => return explore_failure(e),
                },
                PoMode::Inductive => po::check_inductive(sem, p, opts.inductive_bound),
            };
            match verdict {
                Ok(v) if v.holds => UniverseResult { id: String::new(), status: Status::Pass, evidence: None },
                Ok(v) => UniverseResult {
                    id: String::new(),
                    status: Status::Fail,
                    evidence: v.witness.map(|witness| Evidence::Witness { witness }),
                },
                Err(e @ (PoError::Truncated | PoError::TooLarge { .. })) => diag(Status::Refused, e.to_string()),
                Err(e) => diag(Status::Error, e.to_string()),
            }
        }
        Task::Ltl(f) => {
            let g = match graph() {
                Ok(g) => g,
                Err(e) => return explore_failure(e),
            };
            match ltl::check_ltl(sem, &g, f) {
                Ok(v) if v.holds => UniverseResult { id: String::new(), status: Status::Pass, evidence: None },
                Ok(v) => UniverseResult {
                    id: String::new(),
                    status: Status::Fail,
                    evidence: v.counterexample.map(|lasso| Evidence::Lasso { lasso }),
                },
                Err(e @ LtlError::Truncated) => diag(Status::Refused, e.to_string()),
                Err(e) => diag(Status::Error, e.to_string()),
            }
        }
        Task::Trace(steps) => match check_trace(sem, steps) {
            Ok(trace) => UniverseResult { id: String::new(), status: Status::Pass, evidence: Some(Evidence::Trace { trace }) },
            Err(e @ TraceError::Infeasible { .. }) => {
                let message = e.to_string();
                let TraceError::Infeasible { prefix, .. } = e else { unreachable!() };
                UniverseResult { id: String::new(), status: Status::Fail, evidence: Some(Evidence::Refusal { message, trace: prefix }) }
            }
            Err(e) => diag(Status::Error, e.to_string()),
        },
    }
}

/// Runs `vo` against its own machine.
pub fn run_vo(project: &Project, vo: &Vo, cache: &GraphCache, opts: &RunOptions) -> VoResult {
    run_on(project, vo, None, cache, opts)
}

fn run_on(project: &Project, vo: &Vo, inherited_from: Option<String>, cache: &GraphCache, opts: &RunOptions) -> VoResult {
    let started = Instant::now();
    let mut result = run_inner(project, vo, inherited_from, cache, opts);
    if opts.timings {
        result.wall_time_ms = Some(started.elapsed().as_millis() as u64);
    }
    result
}

fn run_inner(project: &Project, vo: &Vo, inherited_from: Option<String>, cache: &GraphCache, opts: &RunOptions) -> VoResult {
    let Some(machine) = project.machine(&vo.machine) else {
        return VoResult::error(vo.clone(), inherited_from, format!("unknown machine `{}`", vo.machine));
    };
    let task = match prepare(project, machine, vo, opts) {
        Ok(t) => t,
        Err(m) => return VoResult::error(vo.clone(), inherited_from, m),
    };
    let universes = match cache.universes(project, machine) {
        Ok(u) => u,
        Err(m) => return VoResult::error(vo.clone(), inherited_from, m),
    };
    if universes.is_empty() {
        let m = format!("no valuation of the constants of `{}` satisfies the axioms", machine.name);
        return VoResult::error(vo.clone(), inherited_from, m);
    }
    let per_universe: Vec<UniverseResult> = universes
        .iter()
        .map(|u| {
            let mut r = match Semantics::new(project, machine, u) {
                Ok(sem) => run_universe(&sem, &task, cache, opts),
                Err(e) => UniverseResult { id: String::new(), status: Status::Error, evidence: Some(Evidence::diagnostic(e.to_string())) },
            };
            r.id = u.id.clone();
            r
        })
        .collect();
    let status = per_universe.iter().map(|u| u.status).max().unwrap_or(Status::Error);
    let evidence = per_universe.iter().find(|u| u.status == status).and_then(|u| u.evidence.clone());
    VoResult { vo: vo.clone(), inherited_from, status, evidence, universes: per_universe, wall_time_ms: None }
}

/// A VO to execute and, for inherited runs, the machine it was declared on.
fn plan(project: &Project, vos: &[Vo], opts: &RunOptions) -> Vec<(Vo, Option<String>)> {
    let selected: Vec<&Vo> = vos.iter().filter(|v| opts.only.as_ref().is_none_or(|r| &v.requirement == r)).collect();
    let declared = |req: &str, machine: &str| vos.iter().any(|v| v.requirement == req && v.machine == machine);
    let mut jobs: Vec<(Vo, Option<String>)> = selected.iter().map(|v| ((*v).clone(), None)).collect();
    let mut inherited = Vec::new();
    for (index, vo) in selected.iter().enumerate() {
        for (m, depth) in project.descendants(&vo.machine) {
            if m.view_of.is_some() {
                continue;
            }
            // A redeclaration on the refining machine, or on any machine
            // between it and the declaring one, takes precedence.
            let overridden = std::iter::once(m.name.as_str())
                .chain(project.ancestors(&m.name).into_iter().map(|a| a.name.as_str()).take(depth - 1))
                .any(|name| declared(&vo.requirement, name));
            if !overridden {
                let mut copy = (*vo).clone();
                copy.machine = m.name.clone();
                inherited.push((depth, index, copy, vo.machine.clone()));
            }
        }
    }
    inherited.sort_by_key(|(depth, index, _, _)| (*depth, *index));
    jobs.extend(inherited.into_iter().map(|(_, _, vo, from)| (vo, Some(from))));
    jobs
}

/// Runs every selected VO, then re-runs each on the machines refining the
/// one it was declared on. Results come back in that order whatever the
/// number of worker threads.
pub fn run_all(project: &Project, vos: &[Vo], cache: &GraphCache, opts: &RunOptions) -> Vec<VoResult> {
    let jobs = plan(project, vos, opts);
    let threads = match opts.threads {
        0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        n => n,
    }
    .min(jobs.len().max(1));
    if threads <= 1 {
        return jobs.into_iter().map(|(vo, from)| run_on(project, &vo, from, cache, opts)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<VoResult>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((vo, from)) = jobs.get(i) else { break };
                let r = run_on(project, vo, from.clone(), cache, opts);
                *slots[i].lock().expect("result slot") = Some(r);
            });
        }
    });
    slots.into_iter().map(|s| s.into_inner().expect("result slot").expect("every job ran")).collect()
}
