//! Seeded generators for small graphs, formulas and machines.

use rand::rngs::StdRng;
use rand::Rng;
use vo_core::ltl::{Atom, Kripke, Ltl};
use vo_core::model::Expr;

pub const EVENTS: [&str; 2] = ["a", "b"];
pub const PROPS: [&str; 2] = ["p", "q"];

/// A transition structure with event names on edges and two state
/// propositions, mirroring how atoms read explored graphs.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub kripke: Kripke,
    pub events: Vec<&'static str>,
    pub props: Vec<[bool; 2]>,
}

impl LabeledGraph {
    pub fn val(&self, a: &Atom, t: usize) -> bool {
        let src = self.kripke.edges[t].0;
        match a {
            Atom::Pred(Expr::Ident(p)) => self.props[src][PROPS.iter().position(|x| x == p).unwrap()],
            Atom::Pred(e) => panic!("unexpected predicate {e}"),
            Atom::Executed(ev) => self.events[t] == ev,
            Atom::Enabled(ev) => self.kripke.outgoing[src].iter().any(|&u| self.events[u] == ev),
        }
    }
}

pub fn graph(rng: &mut StdRng, max_states: usize) -> LabeledGraph {
    let n = rng.gen_range(1..=max_states);
    let mut edges = Vec::new();
    let mut events = Vec::new();
    let mut outgoing = vec![Vec::new(); n];
    for s in 0..n {
        for _ in 0..rng.gen_range(1..=2) {
            outgoing[s].push(edges.len());
            edges.push((s, rng.gen_range(0..n)));
            events.push(EVENTS[rng.gen_range(0..2)]);
        }
    }
    let mut initial = vec![0];
    if n > 1 && rng.gen_bool(0.2) {
        initial.push(rng.gen_range(1..n));
    }
    let props = (0..n).map(|_| [rng.gen_bool(0.5), rng.gen_bool(0.5)]).collect();
    LabeledGraph { kripke: Kripke { initial, edges, outgoing }, events, props }
}

fn atom(rng: &mut StdRng) -> Ltl {
    match rng.gen_range(0..7) {
        0 | 1 => Ltl::pred(Expr::ident(PROPS[rng.gen_range(0..2)])),
        2 | 3 => Ltl::executed(EVENTS[rng.gen_range(0..2)]),
        4 | 5 => Ltl::enabled(EVENTS[rng.gen_range(0..2)]),
        _ => {
            if rng.gen_bool(0.5) {
                Ltl::True
            } else {
                Ltl::False
            }
        }
    }
}

/// Random formula with at most `depth` nested operators.
pub fn formula(rng: &mut StdRng, depth: usize) -> Ltl {
    if depth == 0 || rng.gen_bool(0.2) {
        return atom(rng);
    }
    let d = depth - 1;
    match rng.gen_range(0..11) {
        0 => Ltl::not(formula(rng, d)),
        1 => Ltl::and(formula(rng, d), formula(rng, d)),
        2 => Ltl::or(formula(rng, d), formula(rng, d)),
        3 => Ltl::implies(formula(rng, d), formula(rng, d)),
        4 => Ltl::next(formula(rng, d)),
        5 => Ltl::globally(formula(rng, d)),
        6 => Ltl::finally(formula(rng, d)),
        7 => Ltl::until(formula(rng, d), formula(rng, d)),
        8 => Ltl::release(formula(rng, d), formula(rng, d)),
        _ => Ltl::After(EVENTS[rng.gen_range(0..2)].to_string(), Box::new(formula(rng, d))),
    }
}

fn small_pred(rng: &mut StdRng) -> String {
    let var = ["x", "y"][rng.gen_range(0..2)];
    let c = rng.gen_range(0..=3);
    match rng.gen_range(0..6) {
        0 => format!("{var} <= {c}"),
        1 => format!("{var} /= {c}"),
        2 => format!("x + y <= {}", rng.gen_range(0..=6)),
        3 => format!("{var} ∈ {{{c}, {}}}", rng.gen_range(0..=3)),
        4 => "x = y".to_string(),
        _ => format!("(b = TRUE) => {var} >= {c}"),
    }
}

/// A predicate over the variables of [`machine`].
pub fn predicate(rng: &mut StdRng) -> String {
    match rng.gen_range(0..4) {
        0 => format!("{} and {}", small_pred(rng), small_pred(rng)),
        1 => format!("{} or {}", small_pred(rng), small_pred(rng)),
        _ => small_pred(rng),
    }
}

/// Source of a machine `r` over `x, y : 0..3` and `b : BOOL` whose
/// actions never leave the variable types.
pub fn machine(rng: &mut StdRng) -> String {
    let mut src = String::from("machine r variables x : 0..3 y : 0..3 b : BOOL\n");
    if rng.gen_bool(0.4) {
        src += &format!("invariants @inv1 {}\n", predicate(rng));
    }
    src += &format!(
        "init @i1 x := {} @i2 y := {} @i3 b := {} end\n",
        rng.gen_range(0..=3),
        rng.gen_range(0..=3),
        if rng.gen_bool(0.5) { "TRUE" } else { "FALSE" }
    );
    for e in 0..rng.gen_range(1..=3) {
        let var = ["x", "y"][rng.gen_range(0..2)];
        let other = if var == "x" { "y" } else { "x" };
        let param = rng.gen_bool(0.3);
        let mut guards = Vec::new();
        if rng.gen_bool(0.5) {
            guards.push(small_pred(rng));
        }
        let action = match rng.gen_range(0..6) {
            0 => {
                guards.push(format!("{var} < 3"));
                format!("{var} := {var} + 1")
            }
            1 => {
                guards.push(format!("{var} > 0"));
                format!("{var} := {var} - 1")
            }
            2 => format!("{var} := {other}"),
            3 if param => format!("{var} := v"),
            4 => "b := bool_flip".to_string(),
            _ => format!("{var} := {}", rng.gen_range(0..=3)),
        };
        let action = if action == "b := bool_flip" {
            guards.push("b = FALSE".into());
            "b := TRUE".to_string()
        } else {
            action
        };
        src += &format!("event e{e}");
        if param {
            src += " any v : 0..3";
        }
        if !guards.is_empty() {
            src += " where";
            for (i, g) in guards.iter().enumerate() {
                src += &format!(" @g{i} {g}");
            }
        }
        src += &format!(" then @a1 {action} end\n");
    }
    src + "end\n"
}
