mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;
use support::audit::audit;
use support::{check, corpus_dir};
use vo_core::explore::{check_trace, explore, parse_steps, Limits};
use vo_core::loader::load;
use vo_core::model::{parse_project, Semantics};
use vo_core::vo::{
    conflict_analysis, emit_report, parse_vo_file, run_all, ConflictCategory, Evidence, GraphCache, ReportFormat,
    RunOptions, Status, VoResult,
};

fn statuses(results: &[VoResult]) -> Vec<(String, String, bool, Status)> {
    results.iter().map(|r| (r.vo.requirement.clone(), r.vo.machine.clone(), r.inherited(), r.status)).collect()
}

fn row(req: &str, m: &str, inherited: bool, s: Status) -> (String, String, bool, Status) {
    (req.into(), m.into(), inherited, s)
}

#[test]
fn original_corpus_reproduces_the_sec1_failure() {
    let c = check("hemodialysis");
    assert_eq!(
        statuses(&c.results),
        [
            row("SAF1", "m1", false, Status::Pass),
            row("SEC1", "m1", false, Status::Pass),
            row("FUN1", "m2", false, Status::Pass),
            row("SEC2", "m2", false, Status::Pass),
            row("SAF1", "m2", true, Status::Pass),
            row("SEC1", "m2", true, Status::Fail),
        ]
    );
    let sec1 = c.get("SEC1", "m2");
    assert_eq!(sec1.inherited_from.as_deref(), Some("m1"));
    assert_eq!(sec1.universes.len(), 9);
    assert!(sec1.universes.iter().all(|u| u.status == Status::Fail));
    let Some(Evidence::Lasso { lasso }) = &sec1.evidence else { panic!("{:?}", sec1.evidence) };
    let events = lasso.prefix.events().into_iter().chain(lasso.cycle.events()).collect::<Vec<_>>();
    assert!(events.iter().any(|e| e.starts_with("login") && e.contains("maintenanceId")), "{events:?}");

    assert_eq!(c.conflicts.len(), 1);
    let k = &c.conflicts[0];
    assert_eq!((k.requirement.as_str(), k.passed_on.as_str(), k.failed_on.as_str()), ("SEC1", "m1", "m2"));
    assert_eq!(k.candidates, ["SEC2"]);
    assert_eq!(k.category, ConflictCategory::Contradiction);
}

#[test]
fn refactored_corpus_passes_without_conflicts() {
    let c = check("hemodialysis-refactored");
    assert!(c.results.iter().all(|r| r.status == Status::Pass), "{:?}", statuses(&c.results));
    assert!(c.conflicts.is_empty());
    // The redeclaration on m2 replaces the inherited run.
    assert!(!c.get("SEC1", "m2").inherited());
    assert_eq!(c.results.iter().filter(|r| r.vo.requirement == "SEC1").count(), 2);
}

#[test]
fn markdown_matrix_has_one_fail_cell() {
    let c = check("hemodialysis");
    let md = emit_report(&c.ws.name, &c.results, &c.conflicts, ReportFormat::Markdown);
    let matrix: Vec<&str> = md.lines().skip_while(|l| !l.starts_with("| requirement")).take_while(|l| l.starts_with('|')).collect();
    assert_eq!(matrix[0], "| requirement | m1 | m2 |");
    assert_eq!(matrix.iter().map(|l| l.matches("FAIL").count()).sum::<usize>(), 1);
    assert!(matrix.contains(&"| SEC1 | PASS | FAIL (inherited) |"), "{matrix:?}");
}

#[test]
fn json_report_follows_the_schema() {
    let c = check("hemodialysis");
    let j: serde_json::Value = serde_json::from_str(&emit_report("p", &c.results, &c.conflicts, ReportFormat::Json)).unwrap();
    for r in j["results"].as_array().unwrap() {
        for key in ["requirement", "machine", "technique", "parameters", "inherited", "status", "universes", "wall_time_ms"] {
            assert!(r.get(key).is_some(), "missing {key} in {r}");
        }
    }
    let fail = &j["results"][5];
    assert_eq!(fail["evidence"]["kind"], "lasso");
    assert!(fail["evidence"]["lasso"]["prefix"]["steps"].is_array());
    assert_eq!(j["conflicts"][0]["candidates"], serde_json::json!(["SEC2"]));
    assert_eq!(j["conflicts"][0]["category"], "contradiction");
}

#[test]
fn every_failure_in_the_corpora_replays() {
    let mut checked = 0;
    for name in ["hemodialysis", "hemodialysis-refactored", "hemodialysis-fun2"] {
        let c = check(name);
        for r in &c.results {
            checked += audit(&c.ws.project, r).unwrap();
        }
    }
    // SEC1@m2 in 9 universes, FUN2 on m2 in 8 and on m2Concrete in 1.
    assert_eq!(checked, 18);
}

#[test]
fn reports_are_reproducible_across_threads_and_caches() {
    let ws = load(&corpus_dir("hemodialysis-fun2")).unwrap();
    let render = |cache: &GraphCache, threads: usize| {
        let opts = RunOptions { threads, ..RunOptions::default() };
        let rs = run_all(&ws.project, &ws.vos, cache, &opts);
        let cs = conflict_analysis(&rs, &ws.project);
        (rs.clone(), emit_report(&ws.name, &rs, &cs, ReportFormat::Json))
    };
    let (base, text) = render(&GraphCache::new(), 1);
    for (cache, threads) in [(GraphCache::uncached(), 1), (GraphCache::new(), 4), (GraphCache::uncached(), 3)] {
        let (rs, t) = render(&cache, threads);
        assert_eq!(rs, base);
        assert_eq!(t, text);
    }
}

#[test]
fn a_broken_vo_leaves_the_others_alone() {
    let ws = load(&corpus_dir("hemodialysis")).unwrap();
    let text = std::fs::read_to_string(corpus_dir("hemodialysis/vos/requirements.vo")).unwrap();
    let clean = parse_vo_file("r.vo", &text);
    let broken_text = format!("{text}VO BAD : m1 / LTL / G({{loggedIn = }})\nVO ALSO : m1 / NOPE / x\n");
    let broken = parse_vo_file("r.vo", &broken_text);
    assert_eq!(broken.errors.len(), 1, "{:?}", broken.errors);

    let opts = RunOptions::default();
    let a = run_all(&ws.project, &clean.vos, &GraphCache::new(), &opts);
    let b = run_all(&ws.project, &broken.vos, &GraphCache::new(), &opts);
    let bad: Vec<_> = b.iter().filter(|r| r.vo.requirement == "BAD").collect();
    assert!(bad.iter().all(|r| r.status == Status::Error));
    let rest: Vec<_> = b.into_iter().filter(|r| r.vo.requirement != "BAD").collect();
    assert_eq!(rest, a);
}

#[test]
fn m1_state_space() {
    let ws = load(&corpus_dir("hemodialysis")).unwrap();
    let m1 = ws.project.machine("m1").unwrap();
    let us = ws.project.universes(m1).unwrap();
    assert_eq!(us.len(), 1);
    let sem = Semantics::new(&ws.project, m1, &us[0]).unwrap();
    let g = explore(&sem, Limits::default()).unwrap();
    let logged: BTreeSet<String> = g.states.iter().map(|s| s.get("loggedIn").unwrap().to_string()).collect();
    assert_eq!(logged, BTreeSet::from(["no".to_string(), "yes".to_string()]));
    assert_eq!(g.states.len(), 2);
    assert!(g.find_deadlocks().unwrap().is_empty());
    assert_eq!(g, explore(&sem, Limits::default()).unwrap());
    assert!(explore(&sem, Limits { max_states: 1, max_depth: None }).unwrap().truncated);
}

#[test]
fn m2concrete_traces() {
    let ws = load(&corpus_dir("hemodialysis-fun2")).unwrap();
    let m = ws.project.machine("m2Concrete").unwrap();
    let us = ws.project.universes(m).unwrap();
    assert_eq!(us.len(), 1);
    let sem = Semantics::new(&ws.project, m, &us[0]).unwrap();
    let t = check_trace(&sem, &parse_steps("login(nurseId) startSystem").unwrap()).unwrap();
    assert_eq!(t.steps.len(), 2);
    t.replay(&sem).unwrap();
    assert!(check_trace(&sem, &parse_steps("startSystem").unwrap()).is_err());
    assert!(check_trace(&sem, &[]).unwrap().steps.is_empty());
    // A maintenance login cannot start the treatment.
    assert!(check_trace(&sem, &parse_steps("login(maintenanceId) startSystem").unwrap()).is_err());
}

#[test]
fn m2concrete_startsystem_is_a_self_loop() {
    let ws = load(&corpus_dir("hemodialysis-fun2")).unwrap();
    let m = ws.project.machine("m2Concrete").unwrap();
    let us = ws.project.universes(m).unwrap();
    let sem = Semantics::new(&ws.project, m, &us[0]).unwrap();
    let g = explore(&sem, Limits::default()).unwrap();
    let starts: Vec<_> = g.real_transitions().filter(|t| t.event == "startSystem").collect();
    assert!(!starts.is_empty());
    assert!(starts.iter().all(|t| t.src == t.dst));
}

#[test]
fn empty_trace_vo_passes() {
    let p = parse_project(&[("m.ebs".into(), "machine a variables x : 0..1 init @i x := 0 end end".into())]).unwrap();
    let vos = parse_vo_file("t.vo", "VO T : a / TRACE / \nVO U : a / TRACE / \"\"\"\"\"\"\n").vos;
    let rs = run_all(&p, &vos, &GraphCache::new(), &RunOptions::default());
    assert!(!rs.is_empty());
    for r in rs {
        assert_eq!(r.status, Status::Pass, "{r:?}");
        let Some(Evidence::Trace { trace }) = r.evidence else { panic!() };
        assert!(trace.steps.is_empty());
    }
}

#[test]
fn no_vos_no_results() {
    let ws = load(&corpus_dir("hemodialysis")).unwrap();
    assert!(run_all(&ws.project, &[], &GraphCache::new(), &RunOptions::default()).is_empty());
}

const CHAIN: &str = "machine a variables x : 0..1 init @i x := 0 end end
machine b refines a end
machine c refines b end
machine d variables y : 0..1 init @i y := 0 end end";

fn synthetic(statuses: &[(usize, usize, Status)]) -> (vo_core::model::Project, Vec<VoResult>) {
    let p = parse_project(&[("m.ebs".into(), CHAIN.into())]).unwrap();
    let template = run_all(&p, &parse_vo_file("t.vo", "VO R : d / PO / y = 0\n").vos, &GraphCache::new(), &RunOptions::default());
    let machines = ["a", "b", "c", "d"];
    let results = statuses
        .iter()
        .map(|&(req, m, status)| {
            let mut r = template[0].clone();
            r.vo.requirement = format!("R{req}");
            r.vo.machine = machines[m].to_string();
            r.status = status;
            r
        })
        .collect();
    (p, results)
}

proptest! {
    // Flags exactly the PASS-above/FAIL-below pairs along the refinement chain.
    #[test]
    fn conflict_analysis_is_complete(cells in proptest::collection::vec((0..3usize, 0..4usize, prop_oneof![
        Just(Status::Pass), Just(Status::Fail), Just(Status::Error), Just(Status::Refused)
    ]), 0..10)) {
        let (p, results) = synthetic(&cells);
        let got: BTreeSet<(String, String, String)> = conflict_analysis(&results, &p)
            .into_iter()
            .map(|c| (c.requirement, c.passed_on, c.failed_on))
            .collect();
        let mut want = BTreeSet::new();
        for pass in results.iter().filter(|r| r.status == Status::Pass) {
            for fail in results.iter().filter(|r| r.status == Status::Fail) {
                let below = matches!((pass.vo.machine.as_str(), fail.vo.machine.as_str()),
                    ("a", "b") | ("a", "c") | ("b", "c"));
                if pass.vo.requirement == fail.vo.requirement && below {
                    want.insert((pass.vo.requirement.clone(), pass.vo.machine.clone(), fail.vo.machine.clone()));
                }
            }
        }
        prop_assert_eq!(got, want);
    }
}
