#![allow(dead_code)]

pub mod audit;
pub mod oracle;
pub mod random;

use std::path::PathBuf;

use vo_core::loader::{load, Workspace};
use vo_core::vo::{conflict_analysis, run_all, ConflictEntry, GraphCache, RunOptions, VoResult};

pub fn corpus_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

pub struct Checked {
    pub ws: Workspace,
    pub results: Vec<VoResult>,
    pub conflicts: Vec<ConflictEntry>,
}

impl Checked {
    pub fn get(&self, req: &str, machine: &str) -> &VoResult {
        self.results
            .iter()
            .find(|r| r.vo.requirement == req && r.vo.machine == machine)
            .unwrap_or_else(|| panic!("no result for {req} on {machine}"))
    }
}

/// Loads a corpus project and runs all its VOs, as `vocheck check` does.
pub fn check(name: &str) -> Checked {
    let ws = load(&corpus_dir(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    assert!(ws.vo_errors.is_empty(), "{name}: {:?}", ws.vo_errors);
    let results = run_all(&ws.project, &ws.vos, &GraphCache::new(), &RunOptions::default());
    let conflicts = conflict_analysis(&results, &ws.project);
    Checked { ws, results, conflicts }
}
