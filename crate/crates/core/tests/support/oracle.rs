//! Brute-force LTL semantics on explicit lassos. Shares nothing with the
//! automaton-based checker except the formula type.

use vo_core::ltl::{Atom, Kripke, LassoEdges, Ltl};

/// Truth of `f` at every position of the ultimately periodic word with
/// positions `0..n` and back edge `n - 1 -> loop_start`.
pub fn eval_positions(f: &Ltl, n: usize, loop_start: usize, atom: &dyn Fn(&Atom, usize) -> bool) -> Vec<bool> {
    let next = |i: usize| if i + 1 < n { i + 1 } else { loop_start };
    // Fixpoints over a lasso stabilise after two backward sweeps.
    let sweep = |init: bool, step: &dyn Fn(usize, &[bool]) -> bool| {
        let mut v = vec![init; n];
        for _ in 0..2 {
            for i in (0..n).rev() {
                v[i] = step(i, &v);
            }
        }
        v
    };
    let ev = |g: &Ltl| eval_positions(g, n, loop_start, atom);
    match f {
        Ltl::True => vec![true; n],
        Ltl::False => vec![false; n],
        Ltl::Atom(a) => (0..n).map(|i| atom(a, i)).collect(),
        Ltl::Not(g) => ev(g).into_iter().map(|b| !b).collect(),
        Ltl::And(l, r) => ev(l).into_iter().zip(ev(r)).map(|(a, b)| a && b).collect(),
        Ltl::Or(l, r) => ev(l).into_iter().zip(ev(r)).map(|(a, b)| a || b).collect(),
        Ltl::Implies(l, r) => ev(l).into_iter().zip(ev(r)).map(|(a, b)| !a || b).collect(),
        Ltl::X(g) => {
            let v = ev(g);
            (0..n).map(|i| v[next(i)]).collect()
        }
        Ltl::G(g) => {
            let v = ev(g);
            sweep(true, &|i, cur| v[i] && cur[next(i)])
        }
        Ltl::F(g) => {
            let v = ev(g);
            sweep(false, &|i, cur| v[i] || cur[next(i)])
        }
        Ltl::U(l, r) => {
            let (a, b) = (ev(l), ev(r));
            sweep(false, &|i, cur| b[i] || (a[i] && cur[next(i)]))
        }
        Ltl::R(l, r) => {
            let (a, b) = (ev(l), ev(r));
            sweep(true, &|i, cur| b[i] && (a[i] || cur[next(i)]))
        }
        Ltl::After(event, g) => {
            // From here on, every occurrence of the event satisfies g.
            let v = ev(g);
            let fired: Vec<bool> = (0..n).map(|i| atom(&Atom::Executed(event.clone()), i)).collect();
            sweep(true, &|i, cur| (!fired[i] || v[i]) && cur[next(i)])
        }
    }
}

/// Whether the lasso (edge indices) satisfies `f` at its first position.
pub fn holds_on(f: &Ltl, lasso: &LassoEdges, val: &dyn Fn(&Atom, usize) -> bool) -> bool {
    let edges: Vec<usize> = lasso.prefix.iter().chain(&lasso.cycle).copied().collect();
    let at = |a: &Atom, i: usize| val(a, edges[i]);
    eval_positions(f, edges.len(), lasso.prefix.len(), &at)[0]
}

/// Whether the edge indices form a path from an initial state whose cycle closes.
pub fn is_lasso_of(k: &Kripke, l: &LassoEdges) -> bool {
    let all: Vec<usize> = l.prefix.iter().chain(&l.cycle).copied().collect();
    if l.cycle.is_empty() || !k.initial.contains(&k.edges[all[0]].0) {
        return false;
    }
    let chained = all.windows(2).all(|w| k.edges[w[0]].1 == k.edges[w[1]].0);
    chained && k.edges[*l.cycle.last().unwrap()].1 == k.edges[l.cycle[0]].0
}

#[derive(Debug, PartialEq, Eq)]
pub struct BoundTooSmall;

/// Searches every lasso of at most `bound` edges for one violating `f`.
pub fn oracle_check(
    k: &Kripke,
    f: &Ltl,
    val: &dyn Fn(&Atom, usize) -> bool,
    bound: usize,
) -> Result<Option<LassoEdges>, BoundTooSmall> {
    let states = k.outgoing.len();
    if bound < states {
        return Err(BoundTooSmall);
    }
    let mut path: Vec<usize> = Vec::new();
    for &s in &k.initial {
        if let Some(l) = dfs(k, f, val, bound, s, &mut path) {
            return Ok(Some(l));
        }
    }
    Ok(None)
}

fn dfs(
    k: &Kripke,
    f: &Ltl,
    val: &dyn Fn(&Atom, usize) -> bool,
    bound: usize,
    at: usize,
    path: &mut Vec<usize>,
) -> Option<LassoEdges> {
    if path.len() == bound {
        return None;
    }
    for &t in &k.outgoing[at] {
        path.push(t);
        let end = k.edges[t].1;
        for j in 0..path.len() {
            if k.edges[path[j]].0 == end {
                let l = LassoEdges { prefix: path[..j].to_vec(), cycle: path[j..].to_vec() };
                if !holds_on(f, &l, val) {
                    path.pop();
                    return Some(l);
                }
            }
        }
        if let Some(l) = dfs(k, f, val, bound, end, path) {
            path.pop();
            return Some(l);
        }
        path.pop();
    }
    None
}
