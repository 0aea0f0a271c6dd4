//! Requirement × machine reports in JSON and Markdown.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Value as Json};

use super::conflict::{ConflictCategory, ConflictEntry};
use super::run::{Status, VoResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

fn result_json(r: &VoResult) -> Json {
    json!({
        "requirement": r.vo.requirement,
        "machine": r.vo.machine,
        "technique": r.vo.technique.to_string(),
        "parameters": r.vo.params,
        "inherited": r.inherited(),
        "inherited_from": r.inherited_from,
        "status": r.status.as_str(),
        "universes": r.universes.iter().map(|u| json!({"id": u.id, "status": u.status.as_str()})).collect::<Vec<_>>(),
        "evidence": r.evidence,
        "wall_time_ms": r.wall_time_ms,
    })
}

fn category(c: ConflictCategory) -> &'static str {
    match c {
        ConflictCategory::Contradiction => "contradiction",
        ConflictCategory::RegressionUnderRefinement => "regression-under-refinement",
    }
}

fn conflict_json(c: &ConflictEntry) -> Json {
    json!({
        "requirement": c.requirement,
        "passed_on": c.passed_on,
        "failed_on": c.failed_on,
        "candidates": c.candidates,
        "category": category(c.category),
        "evidence": c.evidence,
    })
}

/// Renders results and conflicts. The output depends only on the inputs.
pub fn emit_report(project: &str, results: &[VoResult], conflicts: &[ConflictEntry], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let doc = json!({
                "project": project,
                "results": results.iter().map(result_json).collect::<Vec<_>>(),
                "conflicts": conflicts.iter().map(conflict_json).collect::<Vec<_>>(),
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => markdown(project, results, conflicts),
    }
}

fn markdown(project: &str, results: &[VoResult], conflicts: &[ConflictEntry]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Validation report: {project}\n");

    let mut machines: Vec<&str> = results.iter().map(|r| r.vo.machine.as_str()).collect();
    machines.sort();
    machines.dedup();
    let mut cells: BTreeMap<&str, BTreeMap<&str, String>> = BTreeMap::new();
    for r in results {
        let mark = if r.inherited() { " (inherited)" } else { "" };
        cells.entry(&r.vo.requirement).or_default().insert(&r.vo.machine, format!("{}{mark}", r.status.as_str()));
    }
    let _ = writeln!(out, "## Matrix\n");
    let _ = writeln!(out, "| requirement |{}", machines.iter().map(|m| format!(" {m} |")).collect::<String>());
    let _ = writeln!(out, "|---|{}", "---|".repeat(machines.len()));
    for (req, row) in &cells {
        let _ = write!(out, "| {req} |");
        for m in &machines {
            let _ = write!(out, " {} |", row.get(m).map(String::as_str).unwrap_or(""));
        }
        out.push('\n');
    }

    let _ = writeln!(out, "\n## Results\n");
    if results.is_empty() {
        let _ = writeln!(out, "No obligations were run.");
    }
    for r in results {
        let origin = match &r.inherited_from {
            Some(from) => format!(", inherited from {from}"),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "- **{}** on `{}` ({}{origin}): **{}**",
            r.vo.requirement,
            r.vo.machine,
            r.vo.technique,
            r.status.as_str()
        );
        let _ = writeln!(out, "  - parameters: `{}`", r.vo.params);
        if r.universes.len() > 1 {
            let mut counts: BTreeMap<Status, usize> = BTreeMap::new();
            for u in &r.universes {
                *counts.entry(u.status).or_default() += 1;
            }
            let counts: Vec<String> = counts.iter().map(|(s, n)| format!("{n} {}", s.as_str())).collect();
            let _ = writeln!(out, "  - universes: {} ({})", r.universes.len(), counts.join(", "));
            if let Some(u) = r.universes.iter().find(|u| u.status == r.status && r.status != Status::Pass) {
                let _ = writeln!(out, "  - first {} universe: {}", r.status.as_str(), u.id);
            }
        }
        if let Some(e) = &r.evidence {
            let _ = writeln!(out, "  - evidence ({}): {}", e.kind(), e.summary());
        }
        if let Some(ms) = r.wall_time_ms {
            let _ = writeln!(out, "  - time: {ms} ms");
        }
    }

    let _ = writeln!(out, "\n## Conflicts\n");
    if conflicts.is_empty() {
        let _ = writeln!(out, "None.");
    }
    for c in conflicts {
        let cands = if c.candidates.is_empty() { "none".to_string() } else { c.candidates.join(", ") };
        let _ = writeln!(
            out,
            "- **{}** passes on `{}` but fails on `{}` ({}); candidate contradictors (shared symbols): {cands}",
            c.requirement,
            c.passed_on,
            c.failed_on,
            category(c.category)
        );
        let _ = writeln!(out, "  - evidence ({}): {}", c.evidence.kind(), c.evidence.summary());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report() {
        let j: Json = serde_json::from_str(&emit_report("p", &[], &[], ReportFormat::Json)).unwrap();
        assert_eq!(j, json!({"project": "p", "results": [], "conflicts": []}));
        let md = emit_report("p", &[], &[], ReportFormat::Markdown);
        assert!(md.contains("No obligations were run."));
        assert!(md.contains("None."));
    }
}
