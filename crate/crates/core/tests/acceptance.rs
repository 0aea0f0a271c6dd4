//! Acceptance suite. Prints one line per criterion and exits non-zero if
//! any criterion fails. Time limits are wall-clock bounds on the build
//! profile used by `cargo test`.

mod support;

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;
use support::audit::{audit, check_witness};
use support::oracle::{holds_on, is_lasso_of, oracle_check};
use support::{check, corpus_dir, random, Checked};
use vo_core::explore::{explore, DotOptions, Limits};
use vo_core::ltl::{check_kripke, Lasso};
use vo_core::loader::{load, load_with};
use vo_core::model::{parse_project, Semantics};
use vo_core::po::{check_inductive, check_reachable, parse_po_params, INDUCTIVE_BOUND};
use vo_core::views::{apply_view, check_view_refines_base, parse_view_file, ViewError};
use vo_core::vo::{emit_report, ConflictCategory, Evidence, ReportFormat, Status};

const CORPUS_LIMIT: Duration = Duration::from_secs(5);
const FUN2_LIMIT: Duration = Duration::from_secs(5);
const ORACLE_LIMIT: Duration = Duration::from_secs(60);
const ORACLE_CASES: usize = 500;
const ORACLE_MAX_STATES: usize = 6;
const ORACLE_DEPTH: usize = 3;
const ORACLE_BOUND: usize = 12;
const PO_CASES: usize = 200;

/// Evidence replayed so far, shared by criteria 1 to 4 and reported by 5.
#[derive(Default)]
struct Audit {
    checked: usize,
    failures: Vec<String>,
}

impl Audit {
    fn corpus(&mut self, c: &Checked) {
        for r in &c.results {
            match audit(&c.ws.project, r) {
                Ok(n) => self.checked += n,
                Err(e) => self.failures.push(e),
            }
        }
    }
}

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn status_of(c: &Checked, req: &str, m: &str) -> Option<(Status, bool)> {
    c.results.iter().find(|r| r.vo.requirement == req && r.vo.machine == m).map(|r| (r.status, r.inherited()))
}

fn events(l: &Lasso) -> Vec<String> {
    l.prefix.events().into_iter().chain(l.cycle.events()).collect()
}

fn criterion_1(audit: &mut Audit) -> Outcome {
    let t = Instant::now();
    let pre = check("hemodialysis");
    let post = check("hemodialysis-refactored");
    let elapsed = t.elapsed();
    audit.corpus(&pre);
    audit.corpus(&post);

    for (req, m) in [("SAF1", "m1"), ("SEC1", "m1"), ("FUN1", "m2"), ("SEC2", "m2")] {
        ensure!(status_of(&pre, req, m) == Some((Status::Pass, false)), "{req}@{m}: {:?}", status_of(&pre, req, m));
    }
    ensure!(status_of(&pre, "SEC1", "m2") == Some((Status::Fail, true)), "SEC1@m2: {:?}", status_of(&pre, "SEC1", "m2"));
    let fails = pre.results.iter().filter(|r| r.status != Status::Pass).count();
    ensure!(fails == 1, "{fails} non-PASS results before the refactoring");
    let sec1 = pre.get("SEC1", "m2");
    let Some(Evidence::Lasso { lasso }) = &sec1.evidence else { return Err(format!("SEC1@m2 evidence {:?}", sec1.evidence)) };
    let ev = events(lasso);
    ensure!(ev.iter().any(|e| e.starts_with("login") && e.contains("maintenanceId")), "no maintenance login in {ev:?}");
    ensure!(pre.conflicts.len() == 1, "{} conflicts", pre.conflicts.len());
    let k = &pre.conflicts[0];
    ensure!(
        k.requirement == "SEC1" && k.passed_on == "m1" && k.failed_on == "m2" && k.candidates == ["SEC2"],
        "conflict {k:?}"
    );
    ensure!(k.category == ConflictCategory::Contradiction, "category {:?}", k.category);

    let bad: Vec<_> = post.results.iter().filter(|r| r.status != Status::Pass).map(|r| r.vo.to_string()).collect();
    ensure!(bad.is_empty(), "refactored corpus: {bad:?}");
    ensure!(post.conflicts.is_empty(), "refactored corpus conflicts: {:?}", post.conflicts);

    // SAF1 discharged in both PO modes.
    for mode in ["reachable", "inductive"] {
        let ws = &pre.ws;
        let vo = vo_core::vo::parse_vo_file("x.vo", &format!("VO SAF1 : m1 / PO / treatmentParameters ∈ 1..5 ; mode={mode}\n")).vos;
        let r = vo_core::vo::run_all(&ws.project, &vo, &vo_core::vo::GraphCache::new(), &Default::default());
        ensure!(r.iter().all(|r| r.status == Status::Pass), "SAF1 in {mode} mode: {:?}", r[0].status);
    }
    ensure!(elapsed < CORPUS_LIMIT, "took {elapsed:?}");
    Ok(format!("SEC1 fails on m2 in {} universes, candidate SEC2; refactored corpus all PASS; {elapsed:.2?}", sec1.universes.len()))
}

fn criterion_2(audit: &mut Audit) -> Outcome {
    let t = Instant::now();
    let c = check("hemodialysis-fun2");
    let elapsed = t.elapsed();
    audit.corpus(&c);
    let mut summary = Vec::new();
    for m in ["m2", "m2Concrete"] {
        let r = c.get("FUN2", m);
        ensure!(r.status == Status::Fail, "FUN2@{m}: {:?}", r.status);
        let Some(Evidence::Lasso { lasso }) = &r.evidence else { return Err(format!("FUN2@{m}: {:?}", r.evidence)) };
        let ev = events(lasso);
        let start = ev.iter().position(|e| e == "startSystem");
        ensure!(start.is_some_and(|i| ev[i + 1..].iter().any(|e| e.starts_with("login"))), "FUN2@{m}: lasso {ev:?}");
        summary.push(format!("{m} FAIL"));
    }
    let m3 = c.get("FUN2", "m3");
    ensure!(m3.status == Status::Pass, "FUN2@m3: {:?}", m3.status);
    ensure!(elapsed < FUN2_LIMIT, "took {elapsed:?}");
    Ok(format!("{}, m3 PASS; {elapsed:.2?}", summary.join(", ")))
}

fn criterion_3(audit: &mut Audit) -> Outcome {
    let t = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    let mut disagreements = Vec::new();
    let mut violated = 0;
    for case in 0..ORACLE_CASES {
        let g = random::graph(&mut rng, ORACLE_MAX_STATES);
        let f = random::formula(&mut rng, ORACLE_DEPTH);
        let val = |a: &_, t| g.val(a, t);
        let mut v = |a: &_, t| Ok::<_, ()>(g.val(a, t));
        let got = check_kripke(&g.kripke, &f, &mut v).map_err(|_| "atom fault")?;
        let want = oracle_check(&g.kripke, &f, &val, ORACLE_BOUND).map_err(|_| "oracle bound too small")?;
        if got.is_some() != want.is_some() {
            disagreements.push(format!("case {case}: {f}"));
        }
        if let Some(l) = got {
            violated += 1;
            audit.checked += 1;
            if !is_lasso_of(&g.kripke, &l) || holds_on(&f, &l, &val) {
                audit.failures.push(format!("oracle case {case}: lasso {l:?} does not refute {f}"));
            }
        }
    }
    let elapsed = t.elapsed();
    ensure!(disagreements.is_empty(), "{} disagreements, first {}", disagreements.len(), disagreements[0]);
    ensure!(elapsed < ORACLE_LIMIT, "took {elapsed:?}");
    Ok(format!("{ORACLE_CASES}/{ORACLE_CASES} agree ({violated} violated, ≤{ORACLE_MAX_STATES} states, depth ≤{ORACLE_DEPTH}); {elapsed:.2?}"))
}

fn criterion_4(audit: &mut Audit) -> Outcome {
    let mut rng = StdRng::seed_from_u64(4242);
    let mut violations = Vec::new();
    let mut inductive_passes = 0;
    for case in 0..PO_CASES {
        let src = random::machine(&mut rng);
        let pred = random::predicate(&mut rng);
        let p = parse_project(&[("r.ebs".into(), src.clone())]).map_err(|e| format!("case {case}: {e:?}"))?;
        let m = p.machine("r").ok_or("no machine")?;
        let us = p.universes(m).map_err(|e| e.to_string())?;
        let sem = Semantics::new(&p, m, &us[0]).map_err(|e| e.to_string())?;
        let (e, _) = parse_po_params(&pred).map_err(|e| e.to_string())?;
        let g = explore(&sem, Limits::default()).map_err(|e| e.to_string())?;
        let reach = check_reachable(&sem, &g, &e).map_err(|e| e.to_string())?;
        let ind = check_inductive(&sem, &e, INDUCTIVE_BOUND).map_err(|e| e.to_string())?;
        if ind.holds && !reach.holds {
            violations.push(format!("case {case}: {pred}"));
        }
        inductive_passes += ind.holds as usize;
        for w in [&reach.witness, &ind.witness].into_iter().flatten() {
            audit.checked += 1;
            if let Err(msg) = check_witness(&sem, &pred, w) {
                audit.failures.push(format!("PO case {case}: {msg}"));
            }
        }
    }
    ensure!(violations.is_empty(), "{} violations, first {}", violations.len(), violations[0]);
    Ok(format!("{PO_CASES} machines, {inductive_passes} INDUCTIVE passes, 0 violations"))
}

fn criterion_5(audit: &Audit) -> Outcome {
    ensure!(audit.failures.is_empty(), "{} of {} failed, first: {}", audit.failures.len(), audit.checked, audit.failures[0]);
    ensure!(audit.checked > 0, "no evidence was produced");
    Ok(format!("{} traces, lassos and witnesses replayed", audit.checked))
}

fn m2concrete_dot() -> Result<String, String> {
    let ws = load(&corpus_dir("hemodialysis-fun2")).map_err(|e| e.to_string())?;
    let m = ws.project.machine("m2Concrete").ok_or("no m2Concrete")?;
    let mut out = String::new();
    for u in ws.project.universes(m).map_err(|e| e.to_string())? {
        let sem = Semantics::new(&ws.project, m, &u).map_err(|e| e.to_string())?;
        out += &explore(&sem, Limits::default()).map_err(|e| e.to_string())?.to_dot(DotOptions::default());
    }
    Ok(out)
}

fn criterion_6() -> Outcome {
    let render = |name: &str| {
        let c = check(name);
        [ReportFormat::Json, ReportFormat::Markdown].map(|f| emit_report(&c.ws.name, &c.results, &c.conflicts, f))
    };
    for name in ["hemodialysis", "hemodialysis-refactored"] {
        ensure!(render(name) == render(name), "{name}: reports differ between runs");
    }
    let (a, b) = (m2concrete_dot()?, m2concrete_dot()?);
    ensure!(a == b, "DOT differs between runs");
    let golden_path = corpus_dir("golden/m2Concrete.dot");
    let golden = std::fs::read_to_string(&golden_path).map_err(|e| format!("{}: {e}", golden_path.display()))?;
    ensure!(a == golden, "DOT differs from {}", golden_path.display());
    Ok("reports and m2Concrete DOT byte-identical; DOT matches golden".into())
}

fn criterion_7() -> Outcome {
    let ws = load(&corpus_dir("hemodialysis-fun2")).map_err(|e| e.to_string())?;
    let v = check_view_refines_base(&ws.project, "m2Concrete", Limits::default()).map_err(|e| e.to_string())?;
    ensure!(v.holds, "m2Concrete: {:?}", v.counterexample);

    let mut p = load_with(&corpus_dir("hemodialysis-fun2"), false).map_err(|e| e.to_string())?.project;
    let parse = |t: &str| parse_view_file("t.view", t).map_err(|e| e.to_string()).map(|mut v| v.remove(0));
    apply_view(&mut p, &parse("view identity of m2 end")?).map_err(|e| e.to_string())?;
    let v = check_view_refines_base(&p, "identity", Limits::default()).map_err(|e| e.to_string())?;
    ensure!(v.holds, "identity view: {:?}", v.counterexample);

    let fixture = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/maintenance_as_doctor.view");
    let text = std::fs::read_to_string(&fixture).map_err(|e| e.to_string())?;
    match apply_view(&mut p, &parse(&text)?) {
        Err(ViewError::AxiomViolated { axiom, .. }) => Ok(format!("m2Concrete and identity included in m2; adversarial view rejected by @{axiom}")),
        other => Err(format!("adversarial view: {other:?}")),
    }
}

fn main() {
    let mut audit = Audit::default();
    let mut run = |n: usize, name: &str, f: &mut dyn FnMut(&mut Audit) -> Outcome| {
        let outcome = f(&mut audit);
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {n} {tag} {name}: {detail}");
        outcome.is_ok()
    };
    let results = [
        run(1, "case-study fidelity", &mut criterion_1),
        run(2, "FUN2 discovery", &mut criterion_2),
        run(3, "LTL oracle equivalence", &mut criterion_3),
        run(4, "PO mode ordering", &mut criterion_4),
        run(5, "counterexample replay audit", &mut |a| criterion_5(a)),
        run(6, "determinism", &mut |_| criterion_6()),
        run(7, "view soundness", &mut |_| criterion_7()),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
