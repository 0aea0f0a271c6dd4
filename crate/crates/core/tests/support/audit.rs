//! Replays VO evidence against the model semantics. Relies only on `fire`,
//! `enabled_bindings` and expression evaluation, never on the checkers
//! that produced the evidence.

use vo_core::explore::{Step, Trace};
use vo_core::ltl::{parse_ltl, Atom, Lasso};
use vo_core::model::{Project, Semantics, State};
use vo_core::po::{parse_po_params, Witness};
use vo_core::vo::{Evidence, Status, Technique, VoResult};

use super::oracle::eval_positions;

fn holds(sem: &Semantics, state: &State, e: &vo_core::model::Expr) -> Result<bool, String> {
    sem.eval(state, e).map_err(|f| f.to_string())?.as_bool().ok_or_else(|| format!("{e} is not boolean"))
}

fn check_lasso(sem: &Semantics, params: &str, l: &Lasso) -> Result<(), String> {
    l.prefix.replay(sem)?;
    if l.cycle.steps.is_empty() {
        return Err("empty cycle".into());
    }
    if &l.cycle.start != l.prefix.last() {
        return Err("cycle does not start where the prefix ends".into());
    }
    l.cycle.replay_from(sem)?;
    if l.cycle.last() != &l.cycle.start {
        return Err("cycle does not close".into());
    }
    // Positions: source state and outgoing step.
    let mut pos: Vec<(&State, &Step)> = Vec::new();
    for t in [&l.prefix, &l.cycle] {
        let mut src = &t.start;
        for s in &t.steps {
            pos.push((src, s));
            src = &s.state;
        }
    }
    let f = parse_ltl(params).map_err(|e| e.to_string())?;
    let atom = |a: &Atom, i: usize| {
        let (src, step) = pos[i];
        match a {
            Atom::Pred(e) => holds(sem, src, e).expect("atom evaluates"),
            Atom::Executed(ev) => &step.event == ev,
            Atom::Enabled(ev) => {
                let idx = sem.event_index(ev).expect("event exists");
                !sem.enabled_bindings(idx, src).is_empty()
            }
        }
    };
    if eval_positions(&f, pos.len(), l.prefix.steps.len(), &atom)[0] {
        return Err(format!("lasso satisfies {params}"));
    }
    Ok(())
}

pub fn check_witness(sem: &Semantics, params: &str, w: &Witness) -> Result<(), String> {
    let (p, _) = parse_po_params(params).map_err(|e| e.to_string())?;
    match w {
        Witness::Reachable { state, trace } => {
            trace.replay(sem)?;
            if trace.last() != state {
                return Err("trace does not end in the witness state".into());
            }
            if holds(sem, state, &p)? {
                return Err(format!("witness state satisfies {p}"));
            }
        }
        Witness::Init { state } => {
            if !sem.init_states().map_err(|e| e.to_string())?.contains(state) {
                return Err("witness state is not initial".into());
            }
            if holds(sem, state, &p)? {
                return Err(format!("initial state satisfies {p}"));
            }
        }
        Witness::Step { pre, event, binding, post, assumed } => {
            if !holds(sem, pre, &p)? {
                return Err("pre-state violates the predicate".into());
            }
            for inv in sem.machine.invariants.iter().filter(|i| assumed.contains(&i.label)) {
                if !holds(sem, pre, &inv.item)? {
                    return Err(format!("pre-state violates {}", inv.label));
                }
            }
            let ev = sem.event_index(event).map_err(|e| e.to_string())?;
            if !sem.enabled_bindings(ev, pre).contains(binding) {
                return Err(format!("{event} not enabled in the pre-state"));
            }
            if &sem.apply(pre, ev, binding).map_err(|e| e.to_string())? != post {
                return Err("firing does not yield the post-state".into());
            }
            if holds(sem, post, &p).unwrap_or(false) {
                return Err("post-state satisfies the predicate".into());
            }
        }
    }
    Ok(())
}

fn check_trace(sem: &Semantics, t: &Trace) -> Result<(), String> {
    t.replay(sem)
}

/// Replays the evidence of every failing universe of `r`. Returns how many
/// pieces of evidence were checked.
pub fn audit(project: &Project, r: &VoResult) -> Result<usize, String> {
    let machine = project.machine(&r.vo.machine).ok_or("unknown machine")?;
    let universes = project.universes(machine).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for u in r.universes.iter().filter(|u| u.status == Status::Fail) {
        let ctx = format!("{} on {} [{}]", r.vo.requirement, r.vo.machine, u.id);
        let universe = universes.iter().find(|x| x.id == u.id).ok_or(format!("{ctx}: unknown universe"))?;
        let sem = Semantics::new(project, machine, universe).map_err(|e| e.to_string())?;
        let res = match (&u.evidence, r.vo.technique) {
            (Some(Evidence::Lasso { lasso }), Technique::Ltl) => check_lasso(&sem, &r.vo.params, lasso),
            (Some(Evidence::Witness { witness }), Technique::Po) => check_witness(&sem, &r.vo.params, witness),
            (Some(Evidence::Refusal { trace, .. }), Technique::Trace) => check_trace(&sem, trace),
            (e, t) => Err(format!("unexpected evidence {e:?} for {t}")),
        };
        res.map_err(|m| format!("{ctx}: {m}"))?;
        checked += 1;
    }
    Ok(checked)
}
