//! `vocheck`: run validation obligations, explore state spaces, replay
//! traces and apply scenario views.
//!
//! Exit codes: 0 clean, 1 a requirement failed or conflicts were found,
//! 2 a tool or model error (including refused checks).

use std::fs;
use std::io::{IsTerminal, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use vo_core::explore::{check_trace, explore, parse_steps, DotOptions, Limits, TraceError};
use vo_core::loader::{load, load_with, Workspace};
use vo_core::model::Semantics;
use vo_core::views::{self, apply_view, check_view_refines_base, machine_source, run_template_vos, ViewSpec};
use vo_core::vo::{conflict_analysis, emit_report, run_all, GraphCache, ReportFormat, RunOptions, Status};

#[derive(Parser)]
#[command(name = "vocheck", version, about = "Check validation obligations over refinement-based models")]
struct Cli {
    /// Project directory containing models/, vos/ and views/.
    #[arg(long, global = true, default_value = ".")]
    project: PathBuf,
    /// Bound on explored states per machine and universe.
    #[arg(long, global = true, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_states: u64,
    #[arg(long, global = true, value_enum, default_value_t = Color::Auto)]
    color: Color,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Color {
    Auto,
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Markdown,
}

#[derive(Subcommand)]
enum Command {
    /// Run every VO, including inherited runs on refining machines.
    Check {
        /// Only run VOs of this requirement.
        #[arg(long)]
        only: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Check PO obligations inductively unless they name a mode.
        #[arg(long)]
        inductive_default: bool,
        /// Record wall-clock time per VO (makes reports non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Explore a machine's state space.
    Explore {
        machine: String,
        /// Write the graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Write the graph as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Replay a sequence of events, e.g. `login(nurseId) startSystem`.
    Trace { machine: String, events: Vec<String> },
    /// Work with scenario views.
    View {
        #[arg(value_enum)]
        action: ViewAction,
        file: PathBuf,
        /// Directory for generated machine sources (`apply`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ViewAction {
    Apply,
    Check,
    RunTemplates,
}

/// Failure of the tool itself, reported on stderr with exit code 2.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

type Outcome = Result<u8, Fatal>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    };
    ExitCode::from(code)
}

fn limits(cli: &Cli) -> Limits {
    Limits { max_states: cli.max_states as usize, max_depth: None }
}

fn colored(cli: &Cli, status: Status) -> String {
    let on = match cli.color {
        Color::On => true,
        Color::Off => false,
        Color::Auto => std::io::stdout().is_terminal(),
    };
    let s = status.as_str();
    if !on {
        return s.to_string();
    }
    let code = match status {
        Status::Pass => "32",
        Status::Fail => "31",
        Status::Refused | Status::Error => "33",
    };
    format!("\x1b[{code}m{s}\x1b[0m")
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Check { only, format, inductive_default, timings } => {
            cmd_check(cli, only.clone(), *format, *inductive_default, *timings)
        }
        Command::Explore { machine, dot, json } => cmd_explore(cli, machine, dot.as_deref(), json.as_deref()),
        Command::Trace { machine, events } => cmd_trace(cli, machine, events),
        Command::View { action, file, out } => cmd_view(cli, *action, file, out.as_deref()),
    }
}

fn cmd_check(cli: &Cli, only: Option<String>, format: Format, inductive_default: bool, timings: bool) -> Outcome {
    let ws = load(&cli.project)?;
    for n in &ws.notes {
        eprintln!("note: {n}");
    }
    for e in &ws.vo_errors {
        eprintln!("error: {e}");
    }
    let opts = RunOptions { limits: limits(cli), inductive_default, timings, only, ..RunOptions::default() };
    let results = run_all(&ws.project, &ws.vos, &GraphCache::new(), &opts);
    let conflicts = conflict_analysis(&results, &ws.project);
    let fmt = match format {
        Format::Json => ReportFormat::Json,
        Format::Markdown => ReportFormat::Markdown,
    };
    print!("{}", emit_report(&ws.name, &results, &conflicts, fmt));
    let worst = results.iter().map(|r| r.status).max().unwrap_or(Status::Pass);
    Ok(if !ws.vo_errors.is_empty() || worst >= Status::Refused {
        2
    } else if worst == Status::Fail || !conflicts.is_empty() {
        1
    } else {
        0
    })
}

fn machine_universes(ws: &Workspace, name: &str) -> Result<Vec<vo_core::model::Universe>, Fatal> {
    let m = ws.project.machine(name).ok_or_else(|| Fatal(format!("unknown machine `{name}`")))?;
    let us = ws.project.universes(m)?;
    if us.is_empty() {
        return Err(Fatal(format!("no valuation of the constants of `{name}` satisfies the axioms")));
    }
    Ok(us)
}

fn cmd_explore(cli: &Cli, machine: &str, dot: Option<&Path>, json_out: Option<&Path>) -> Outcome {
    let ws = load(&cli.project)?;
    let universes = machine_universes(&ws, machine)?;
    let m = ws.project.machine(machine).expect("checked above");
    let mut dot_text = String::new();
    let mut graphs = Vec::new();
    for u in &universes {
        let sem = Semantics::new(&ws.project, m, u)?;
        let g = explore(&sem, limits(cli)).map_err(|e| match &e.trace {
            Some(t) => Fatal(format!("{e}\nreached by:\n{t}")),
            None => Fatal(e.to_string()),
        })?;
        println!(
            "{} [{}]: {} states, {} transitions, {} deadlocks{}",
            machine,
            u.id,
            g.states.len(),
            g.real_transitions().count(),
            g.deadlocks.len(),
            if g.truncated { ", truncated" } else { "" }
        );
        if g.truncated {
            eprintln!("warning: {machine} [{}]: exploration stopped at {} states", u.id, cli.max_states);
        }
        dot_text.push_str(&g.to_dot(DotOptions::default()));
        graphs.push(json!({"universe": u.id, "graph": g.to_json()}));
    }
    if let Some(path) = dot {
        fs::write(path, &dot_text).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = json_out {
        let doc = json!({"machine": machine, "universes": graphs});
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        fs::write(path, text).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
    }
    Ok(0)
}

fn cmd_trace(cli: &Cli, machine: &str, events: &[String]) -> Outcome {
    let ws = load(&cli.project)?;
    let universes = machine_universes(&ws, machine)?;
    let m = ws.project.machine(machine).expect("checked above");
    let steps = parse_steps(&events.join(" "))?;
    let mut code = 0;
    for u in &universes {
        if universes.len() > 1 {
            println!("universe {}:", u.id);
        }
        let sem = Semantics::new(&ws.project, m, u)?;
        match check_trace(&sem, &steps) {
            Ok(t) => print!("{t}"),
            Err(e @ TraceError::Infeasible { .. }) => {
                if let TraceError::Infeasible { prefix, .. } = &e {
                    print!("{prefix}");
                }
                println!("refused: {e}");
                code = code.max(1);
            }
            Err(e) => {
                println!("error: {e}");
                code = 2;
            }
        }
    }
    Ok(code)
}

/// Views of the project plus those in `file`, and the names of the latter.
fn views_with(ws: &Workspace, file: &Path) -> Result<(Vec<ViewSpec>, Vec<String>), Fatal> {
    let text = fs::read_to_string(file).map_err(|e| Fatal(format!("{}: {e}", file.display())))?;
    let own = views::parse_view_file(&file.to_string_lossy(), &text)?;
    let names: Vec<String> = own.iter().map(|v| v.name.clone()).collect();
    let mut all: Vec<ViewSpec> = ws.views.iter().filter(|v| !names.contains(&v.name)).cloned().collect();
    all.extend(own);
    Ok((all, names))
}

fn cmd_view(cli: &Cli, action: ViewAction, file: &Path, out: Option<&Path>) -> Outcome {
    let mut ws = load_with(&cli.project, false)?;
    let (all, selected) = views_with(&ws, file)?;
    let pick = |name: &str| all.iter().find(|v| v.name == name).expect("selected views are loaded");
    match action {
        ViewAction::Apply => {
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| ws.root.join("generated"));
            fs::create_dir_all(&dir).map_err(|e| Fatal(format!("{}: {e}", dir.display())))?;
            for name in &selected {
                let d = apply_view(&mut ws.project, pick(name))?;
                let path = dir.join(format!("{name}.ebs"));
                fs::write(&path, machine_source(&ws.project, &d.machine))
                    .map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
                println!("{name}: derived from {}, written to {}", d.spec.base, path.display());
            }
            Ok(0)
        }
        ViewAction::Check => {
            let mut code = 0;
            for name in &selected {
                apply_view(&mut ws.project, pick(name))?;
                let v = check_view_refines_base(&ws.project, name, limits(cli))?;
                let status = if v.holds { Status::Pass } else { Status::Fail };
                println!("{name}: trace inclusion {} ({} product states)", colored(cli, status), v.explored);
                if let Some(t) = &v.counterexample {
                    println!("  not admitted by any base universe:");
                    print!("{t}");
                    code = 1;
                }
            }
            Ok(code)
        }
        ViewAction::RunTemplates => {
            // Recipes: views in the file with templates, and the recipes the
            // file's views follow.
            let mut recipes: Vec<String> = Vec::new();
            for name in &selected {
                let v = pick(name);
                let r = if v.templates.is_empty() { v.follows.clone() } else { Some(v.name.clone()) };
                if let Some(r) = r.filter(|r| !recipes.contains(r)) {
                    recipes.push(r);
                }
            }
            let opts = RunOptions { limits: limits(cli), ..RunOptions::default() };
            let mut results = Vec::new();
            let mut code = 0;
            for r in &recipes {
                let recipe = all.iter().find(|v| &v.name == r).ok_or_else(|| Fatal(format!("unknown recipe view `{r}`")))?;
                let scenarios: Vec<ViewSpec> = all
                    .iter()
                    .filter(|v| v.name == *r || v.follows.as_deref() == Some(r.as_str()))
                    .cloned()
                    .collect();
                let run = run_template_vos(&mut ws.project, recipe, &scenarios, &opts)?;
                for a in &run.aggregates {
                    let vac = if a.vacuous { " (vacuous: no scenarios)" } else { "" };
                    eprintln!("template {} over {} scenario(s) of {r}: {}{vac}", a.requirement, scenarios.len(), colored(cli, a.status));
                    code = code.max(match a.status {
                        Status::Pass => 0,
                        Status::Fail => 1,
                        _ => 2,
                    });
                }
                results.extend(run.results);
            }
            print!("{}", emit_report(&ws.name, &results, &[], ReportFormat::Json));
            std::io::stdout().flush()?;
            Ok(code)
        }
    }
}
