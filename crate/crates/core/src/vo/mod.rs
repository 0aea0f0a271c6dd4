//! Validation obligations: declarations, execution, conflict analysis and
//! reporting.

pub mod conflict;
pub mod report;
pub mod run;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::ParseError;
use crate::model::ast::Origin;

pub use conflict::{conflict_analysis, ConflictCategory, ConflictEntry};
pub use report::{emit_report, ReportFormat};
pub use run::{run_all, run_vo, Evidence, GraphCache, RunOptions, Status, UniverseResult, VoResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Technique {
    Po,
    Ltl,
    Trace,
}

impl Technique {
    pub fn parse(s: &str) -> Option<Technique> {
        match s {
            "PO" => Some(Technique::Po),
            "LTL" => Some(Technique::Ltl),
            "TRACE" => Some(Technique::Trace),
            _ => None,
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Technique::Po => "PO",
            Technique::Ltl => "LTL",
            Technique::Trace => "TRACE",
        })
    }
}

/// `requirement : machine / technique / parameters`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Vo {
    pub requirement: String,
    pub machine: String,
    pub technique: Technique,
    pub params: String,
    pub origin: Origin,
}

impl fmt::Display for Vo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VO {} : {} / {} / {}", self.requirement, self.machine, self.technique, self.params)
    }
}

/// Result of reading one VO file. Malformed lines are reported in
/// `errors` without affecting the other declarations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VoFile {
    pub vos: Vec<Vo>,
    /// Normalisations applied to non-canonical spellings.
    pub notes: Vec<String>,
    pub errors: Vec<ParseError>,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

/// Splits a header into (requirement, machine, technique, params, canonical).
fn split_line(line: &str) -> Result<(String, String, String, String, bool), String> {
    if let Some(rest) = line.strip_prefix("VO").filter(|r| r.starts_with(char::is_whitespace)) {
        let (req, rest) = rest.split_once(':').ok_or("expected `:` after the requirement id")?;
        let (machine, rest) = rest.split_once('/').ok_or("expected `/` after the machine name")?;
        let (tech, params) = rest.split_once('/').ok_or("expected `/` after the technique")?;
        return Ok((req.trim().into(), machine.trim().into(), tech.trim().into(), params.trim().into(), true));
    }
    // Lenient spellings: `REQ/M/TECH: params` and `REQ/M/TECH/params`.
    let (req, rest) = line.split_once('/').ok_or("expected `VO <id> : <machine> / <technique> / <parameters>`")?;
    let (machine, rest) = rest.split_once('/').ok_or("expected `/` after the machine name")?;
    let cut = rest.find([':', '/']).ok_or("expected `:` or `/` after the technique")?;
    let (tech, params) = (&rest[..cut], &rest[cut + 1..]);
    Ok((req.trim().into(), machine.trim().into(), tech.trim().into(), params.trim().into(), false))
}

pub fn parse_vo_file(file: &str, text: &str) -> VoFile {
    let mut out = VoFile::default();
    let mut seen = BTreeSet::new();
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    while i < lines.len() {
        let lineno = i as u32 + 1;
        let line = lines[i].trim();
        i += 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let col = lines[i - 1].len() - lines[i - 1].trim_start().len() + 1;
        let error = |msg: String| ParseError::new(file, lineno, col as u32, msg);
        let (req, machine, tech, mut params, canonical) = match split_line(line) {
            Ok(parts) => parts,
            Err(m) => {
                out.errors.push(error(m.to_string()));
                continue;
            }
        };
        if let Some(first) = params.strip_prefix("\"\"\"") {
            // Quoted block, possibly spanning lines.
            let mut body = first.to_string();
            let mut closed = false;
            loop {
                if let Some(end) = body.find("\"\"\"") {
                    body.truncate(end);
                    closed = true;
                    break;
                }
                if i >= lines.len() {
                    break;
                }
                body.push('\n');
                body.push_str(lines[i]);
                i += 1;
            }
            if !closed {
                out.errors.push(error("unterminated `\"\"\"` block".into()));
                continue;
            }
            params = body.trim().to_string();
        }
        if !is_ident(&req) {
            out.errors.push(error(format!("`{req}` is not a valid requirement id")));
            continue;
        }
        if !is_ident(&machine) {
            out.errors.push(error(format!("`{machine}` is not a valid machine name")));
            continue;
        }
        let Some(technique) = Technique::parse(&tech) else {
            out.errors.push(error(format!("unknown technique `{tech}` (expected PO, LTL or TRACE)")));
            continue;
        };
        if !seen.insert((req.clone(), machine.clone())) {
            out.errors.push(error(format!("duplicate VO for `{req}` on `{machine}`")));
            continue;
        }
        let vo = Vo { requirement: req, machine, technique, params, origin: Origin { file: file.into(), line: lineno } };
        if !canonical {
            out.notes.push(format!("{}:{lineno}: normalised to `{vo}`", file));
        }
        out.vos.push(vo);
    }
    out
}
