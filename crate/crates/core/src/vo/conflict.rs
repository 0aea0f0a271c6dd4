//! Spotting requirements that hold on an abstract machine but break under
//! refinement, and guessing which other requirements are involved.

use std::collections::BTreeSet;

use serde::Serialize;

use super::run::{Evidence, Status, VoResult};
use super::{Technique, Vo};
use crate::explore::parse_steps;
use crate::ltl::{parse_ltl, Atom};
use crate::model::project::Project;
use crate::po::parse_po_params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictCategory {
    /// Another requirement holding on the refinement shares symbols with the
    /// failing one.
    Contradiction,
    /// Nothing else on the refinement touches the same symbols.
    RegressionUnderRefinement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictEntry {
    pub requirement: String,
    pub passed_on: String,
    pub failed_on: String,
    pub evidence: Evidence,
    /// Requirements passing on `failed_on` whose parameters share state
    /// symbols with the failing VO. A heuristic, not a proof of conflict.
    pub candidates: Vec<String>,
    pub category: ConflictCategory,
}

/// Variables, constants and events a VO's parameters mention on its
/// machine. Set names and enumerated elements are not counted: they are
/// shared vocabulary, not state.
pub fn footprint(project: &Project, vo: &Vo) -> BTreeSet<String> {
    let mut names: Vec<String> = Vec::new();
    let mut events: Vec<String> = Vec::new();
    match vo.technique {
        Technique::Po => {
            if let Ok((e, _)) = parse_po_params(&vo.params) {
                e.for_each_ident(&mut |n| names.push(n.to_string()));
            }
        }
        Technique::Ltl => {
            if let Ok(f) = parse_ltl(&vo.params) {
                f.for_each_atom(&mut |a| {
                    if let Atom::Pred(e) = a {
                        e.for_each_ident(&mut |n| names.push(n.to_string()));
                    }
                });
                events.extend(f.events().into_iter().map(String::from));
            }
        }
        Technique::Trace => {
            if let Ok(steps) = parse_steps(&vo.params) {
                for s in steps {
                    for (_, e) in &s.args {
                        e.for_each_ident(&mut |n| names.push(n.to_string()));
                    }
                    events.push(s.event);
                }
            }
        }
    }
    let Some(machine) = project.machine(&vo.machine) else {
        return BTreeSet::new();
    };
    let is_state = |n: &str| {
        machine.variable(n).is_some()
            || (project.visible_constants(machine).any(|k| k.name == n)
                && !project.symbols.is_set(n)
                && project.symbols.element(n).is_none())
    };
    names
        .into_iter()
        .filter(|n| is_state(n))
        .chain(events.into_iter().filter(|e| machine.event(e).is_some()))
        .collect()
}

/// Every requirement passing on some machine and failing on one refining
/// it, ordered by (requirement, passed_on, failed_on).
pub fn conflict_analysis(results: &[VoResult], project: &Project) -> Vec<ConflictEntry> {
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for fail in results.iter().filter(|r| r.status == Status::Fail) {
        for pass in results.iter().filter(|r| r.status == Status::Pass) {
            let (req, m, m2) = (&fail.vo.requirement, &pass.vo.machine, &fail.vo.machine);
            if &pass.vo.requirement != req || !project.refines_transitively(m2, m) {
                continue;
            }
            if !seen.insert((req.clone(), m.clone(), m2.clone())) {
                continue;
            }
            let failing = footprint(project, &fail.vo);
            let mut candidates: Vec<String> = results
                .iter()
                .filter(|r| r.status == Status::Pass && &r.vo.machine == m2 && &r.vo.requirement != req)
                .filter(|r| !footprint(project, &r.vo).is_disjoint(&failing))
                .map(|r| r.vo.requirement.clone())
                .collect();
            candidates.sort();
            candidates.dedup();
            let category = if candidates.is_empty() {
                ConflictCategory::RegressionUnderRefinement
            } else {
                ConflictCategory::Contradiction
            };
            let evidence = fail.evidence.clone().unwrap_or_else(|| Evidence::diagnostic("no evidence recorded"));
            entries.push(ConflictEntry {
                requirement: req.clone(),
                passed_on: m.clone(),
                failed_on: m2.clone(),
                evidence,
                candidates,
                category,
            });
        }
    }
    entries.sort_by(|a, b| (&a.requirement, &a.passed_on, &a.failed_on).cmp(&(&b.requirement, &b.passed_on, &b.failed_on)));
    entries
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::project::parse_project;
    use crate::vo::{parse_vo_file, run_all, GraphCache, RunOptions};

    const SRC: &str = "context c sets S = {s1, s2} end \
                       machine a sees c variables x : 0..3 y : S init @act1 x := 0 @act2 y := s1 end \
                       event inc where @g x < 3 then @a x := x + 1 end end \
                       machine b refines a \
                       event inc where @g x < 3 then @a x := x + 1 @c y := s2 end end";

    fn run(vo_text: &str) -> Vec<ConflictEntry> {
        let p = parse_project(&[("m.ebs".into(), SRC.into())]).unwrap();
        let vos = parse_vo_file("t.vo", vo_text).vos;
        let rs = run_all(&p, &vos, &GraphCache::new(), &RunOptions::default());
        conflict_analysis(&rs, &p)
    }

    #[test]
    fn footprint_skips_sets_and_elements() {
        let p = parse_project(&[("m.ebs".into(), SRC.into())]).unwrap();
        let vo = &parse_vo_file("t.vo", "VO R : a / LTL / G({y = s1 or y ∈ S} => e(inc))").vos[0];
        assert_eq!(footprint(&p, vo).into_iter().collect::<Vec<_>>(), ["inc", "y"]);
    }

    #[test]
    fn regression_without_candidates() {
        let c = run("VO R : a / LTL / G({x > 0} => {y = s1})\nVO Q : a / PO / 1 ≥ 0\n");
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].passed_on.as_str(), c[0].failed_on.as_str()), ("a", "b"));
        assert!(c[0].candidates.is_empty());
        assert_eq!(c[0].category, ConflictCategory::RegressionUnderRefinement);
    }

    #[test]
    fn overlapping_requirement_is_a_candidate() {
        let c = run("VO R : a / LTL / G({x > 0} => {y = s1})\nVO Q : b / LTL / G({x > 0} => {y = s2})\n");
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].candidates, ["Q"]);
        assert_eq!(c[0].category, ConflictCategory::Contradiction);
    }

    #[test]
    fn no_refinement_no_conflict() {
        assert!(run("VO R : b / PO / x ≤ 1\n").is_empty());
    }
}
