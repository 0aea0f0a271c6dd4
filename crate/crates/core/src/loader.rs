//! Loading a project directory: `models/**/*.ebs`, `vos/**/*.vo` and
//! `views/**/*.view`.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::error::{ParseError, ResolveError};
use crate::model::project::{parse_project, Project};
use crate::model::typeck::{typecheck, Diagnostic};
use crate::views::{apply_view, ViewError, ViewSpec};
use crate::vo::{parse_vo_file, Vo};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("project directory `{0}` does not exist")]
    Missing(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no model files under `{0}/models`")]
    NoModels(PathBuf),
    #[error("{}", join(.0))]
    Resolve(Vec<ResolveError>),
    #[error("{}", join(.0))]
    Type(Vec<Diagnostic>),
    #[error(transparent)]
    ViewParse(#[from] ParseError),
    #[error(transparent)]
    View(#[from] ViewError),
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join("\n")
}

/// A loaded project with its VOs and views. Views are already applied, so
/// their machines can be the target of VOs.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
    pub name: String,
    pub project: Project,
    pub vos: Vec<Vo>,
    /// Normalisations applied to lenient VO spellings.
    pub notes: Vec<String>,
    /// Malformed VO declarations. The well-formed ones still run.
    pub vo_errors: Vec<ParseError>,
    pub views: Vec<ViewSpec>,
}

/// Files under `dir` with extension `ext`, recursively, sorted by path.
pub fn discover(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, LoadError> {
    let mut out = Vec::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = fs::read_dir(&d).map_err(|source| LoadError::Io { path: d.clone(), source })?;
        for entry in entries {
            let path = entry.map_err(|source| LoadError::Io { path: d.clone(), source })?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == ext) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn read(root: &Path, path: &Path) -> Result<(String, String), LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
    let name = path.strip_prefix(root).unwrap_or(path).to_string_lossy().replace('\\', "/");
    Ok((name, text))
}

pub fn load(root: &Path) -> Result<Workspace, LoadError> {
    load_with(root, true)
}

/// Like [`load`]; with `apply_views` false the views are parsed but their
/// machines are not derived.
pub fn load_with(root: &Path, apply_views: bool) -> Result<Workspace, LoadError> {
    if !root.is_dir() {
        return Err(LoadError::Missing(root.to_path_buf()));
    }
    let models = discover(&root.join("models"), "ebs")?;
    if models.is_empty() {
        return Err(LoadError::NoModels(root.to_path_buf()));
    }
    let sources = models.iter().map(|p| read(root, p)).collect::<Result<Vec<_>, _>>()?;
    let mut project = parse_project(&sources).map_err(LoadError::Resolve)?;
    let diags = typecheck(&project);
    if !diags.is_empty() {
        return Err(LoadError::Type(diags));
    }

    let mut views = Vec::new();
    for p in discover(&root.join("views"), "view")? {
        let (name, text) = read(root, &p)?;
        views.extend(crate::views::parse_view_file(&name, &text)?);
    }
    if apply_views {
        for v in &views {
            apply_view(&mut project, v)?;
        }
    }

    let (mut vos, mut notes, mut vo_errors) = (Vec::new(), Vec::new(), Vec::new());
    for p in discover(&root.join("vos"), "vo")? {
        let (name, text) = read(root, &p)?;
        let f = parse_vo_file(&name, &text);
        for vo in f.vos {
            if vos.iter().any(|o: &Vo| o.requirement == vo.requirement && o.machine == vo.machine) {
                vo_errors.push(ParseError::new(
                    &vo.origin.file,
                    vo.origin.line,
                    1,
                    format!("duplicate VO for `{}` on `{}`", vo.requirement, vo.machine),
                ));
            } else {
                vos.push(vo);
            }
        }
        notes.extend(f.notes);
        vo_errors.extend(f.errors);
    }
    let name = root
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| root.to_string_lossy().into_owned());
    Ok(Workspace { root: root.to_path_buf(), name, project, vos, notes, vo_errors, views })
}
