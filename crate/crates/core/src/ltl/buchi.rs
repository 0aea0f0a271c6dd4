//! Tableau translation of NNF formulas to Büchi automata.
//!
//! The generalized automaton comes from the classic on-the-fly expansion of
//! Gerth, Peled, Vardi and Wolper; it is then degeneralized with a counter.
//! Automata are edge-labelled: node 0 is a pseudo-initial node and every
//! edge carries the literals the letter read on it must satisfy.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{normalize, Atom, Ltl};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Nnf {
    True,
    Lit(usize, bool),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
    X(Box<Nnf>),
    U(Box<Nnf>, Box<Nnf>),
    R(Box<Nnf>, Box<Nnf>),
    False,
}

/// Literal: atom index and polarity.
pub type Lit = (usize, bool);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiEdge {
    pub src: usize,
    pub label: Vec<Lit>,
    pub dst: usize,
}

#[derive(Debug, Clone)]
pub struct Buchi {
    pub atoms: Vec<Atom>,
    /// Number of nodes; node 0 is initial.
    pub nodes: usize,
    pub edges: Vec<BuchiEdge>,
    pub outgoing: Vec<Vec<usize>>,
    pub accepting: Vec<bool>,
}

impl Buchi {
    /// Whether a letter (atom valuation) satisfies an edge label.
    pub fn admits(label: &[Lit], letter: &[bool]) -> bool {
        label.iter().all(|&(a, pos)| letter[a] == pos)
    }
}

fn intern(f: &Ltl, atoms: &mut Vec<Atom>) -> Nnf {
    let bx = |f: &Ltl, atoms: &mut Vec<Atom>| Box::new(intern(f, atoms));
    let lit = |a: &Atom, pos: bool, atoms: &mut Vec<Atom>| {
        let i = match atoms.iter().position(|x| x == a) {
            Some(i) => i,
            None => {
                atoms.push(a.clone());
                atoms.len() - 1
            }
        };
        Nnf::Lit(i, pos)
    };
    match f {
        Ltl::True => Nnf::True,
        Ltl::False => Nnf::False,
        Ltl::Atom(a) => lit(a, true, atoms),
        Ltl::Not(x) => match &**x {
            Ltl::Atom(a) => lit(a, false, atoms),
            _ => unreachable!("not in negation normal form"),
        },
        Ltl::And(l, r) => Nnf::And(bx(l, atoms), bx(r, atoms)),
        Ltl::Or(l, r) => Nnf::Or(bx(l, atoms), bx(r, atoms)),
        Ltl::X(x) => Nnf::X(bx(x, atoms)),
        Ltl::U(l, r) => Nnf::U(bx(l, atoms), bx(r, atoms)),
        Ltl::R(l, r) => Nnf::R(bx(l, atoms), bx(r, atoms)),
        Ltl::Implies(..) | Ltl::G(_) | Ltl::F(_) | Ltl::After(..) => unreachable!("not in negation normal form"),
    }
}

fn untils(f: &Nnf, out: &mut Vec<(Nnf, Nnf)>) {
    match f {
        Nnf::True | Nnf::False | Nnf::Lit(..) => {}
        Nnf::X(x) => untils(x, out),
        Nnf::And(l, r) | Nnf::Or(l, r) | Nnf::R(l, r) => {
            untils(l, out);
            untils(r, out);
        }
        Nnf::U(l, r) => {
            if !out.iter().any(|(u, _)| u == f) {
                out.push((f.clone(), (**r).clone()));
            }
            untils(l, out);
            untils(r, out);
        }
    }
}

struct Pending {
    incoming: BTreeSet<usize>,
    new: Vec<Nnf>,
    old: BTreeSet<Nnf>,
    next: BTreeSet<Nnf>,
}

struct Tableau {
    incoming: Vec<BTreeSet<usize>>,
    old: Vec<BTreeSet<Nnf>>,
    index: HashMap<(BTreeSet<Nnf>, BTreeSet<Nnf>), usize>,
}

/// Generalized Büchi automaton as (node incoming sets, node `old` sets).
/// Node ids start at 1; 0 stands for the initial pseudo-node.
fn expand(f: Nnf) -> Tableau {
    let mut t = Tableau { incoming: vec![BTreeSet::new()], old: vec![BTreeSet::new()], index: HashMap::new() };
    let mut work = vec![Pending { incoming: [0].into(), new: vec![f], old: BTreeSet::new(), next: BTreeSet::new() }];
    while let Some(mut n) = work.pop() {
        let Some(eta) = n.new.pop() else {
            let key = (n.old, n.next);
            if let Some(&id) = t.index.get(&key) {
                t.incoming[id].extend(n.incoming);
                continue;
            }
            let id = t.incoming.len();
            t.incoming.push(n.incoming);
            t.old.push(key.0.clone());
            work.push(Pending {
                incoming: [id].into(),
                new: key.1.iter().cloned().collect(),
                old: BTreeSet::new(),
                next: BTreeSet::new(),
            });
            t.index.insert(key, id);
            continue;
        };
        if n.old.contains(&eta) {
            work.push(n);
            continue;
        }
        let split = |n: &Pending, eta: &Nnf, new: &[&Nnf], next: Option<&Nnf>| {
            let mut p = Pending {
                incoming: n.incoming.clone(),
                new: n.new.clone(),
                old: n.old.clone(),
                next: n.next.clone(),
            };
            for x in new {
                if !p.old.contains(*x) {
                    p.new.push((*x).clone());
                }
            }
            p.old.insert(eta.clone());
            if let Some(x) = next {
                p.next.insert(x.clone());
            }
            p
        };
        match &eta {
            Nnf::False => {}
            Nnf::True => {
                n.old.insert(eta);
                work.push(n);
            }
            Nnf::Lit(a, pos) => {
                if !n.old.contains(&Nnf::Lit(*a, !pos)) {
                    n.old.insert(eta);
                    work.push(n);
                }
            }
            Nnf::And(l, r) => work.push(split(&n, &eta, &[l, r], None)),
            Nnf::X(x) => work.push(split(&n, &eta, &[], Some(x))),
            Nnf::Or(l, r) => {
                let a = split(&n, &eta, &[l], None);
                let b = split(&n, &eta, &[r], None);
                work.push(b);
                work.push(a);
            }
            Nnf::U(l, r) => {
                let a = split(&n, &eta, &[l], Some(&eta));
                let b = split(&n, &eta, &[r], None);
                work.push(b);
                work.push(a);
            }
            Nnf::R(l, r) => {
                let a = split(&n, &eta, &[r], Some(&eta));
                let b = split(&n, &eta, &[l, r], None);
                work.push(b);
                work.push(a);
            }
        }
    }
    t
}

fn label_of(old: &BTreeSet<Nnf>) -> Vec<Lit> {
    old.iter()
        .filter_map(|f| match f {
            Nnf::Lit(a, p) => Some((*a, *p)),
            _ => None,
        })
        .collect()
}

/// Büchi automaton accepting exactly the letter sequences satisfying `f`.
/// `f` need not be normalized.
pub fn to_buchi(f: &Ltl) -> Buchi {
    let mut atoms = Vec::new();
    let nnf = intern(&normalize(f), &mut atoms);
    let mut us = Vec::new();
    untils(&nnf, &mut us);
    let tab = expand(nnf);
    let n = tab.incoming.len();
    let labels: Vec<Vec<Lit>> = tab.old.iter().map(label_of).collect();
    // Acceptance sets: a U b is either absent or fulfilled.
    let sets: Vec<Vec<bool>> = us
        .iter()
        .map(|(u, rhs)| (0..n).map(|q| q != 0 && (!tab.old[q].contains(u) || tab.old[q].contains(rhs))).collect())
        .collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (q, inc) in tab.incoming.iter().enumerate().skip(1) {
        for &p in inc {
            succ[p].push(q);
        }
    }

    // Degeneralize over reachable (node, counter) pairs.
    let k = sets.len();
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut states = vec![(0usize, 0usize)];
    ids.insert((0, 0), 0);
    let mut queue = VecDeque::from([0usize]);
    let mut edges = Vec::new();
    while let Some(id) = queue.pop_front() {
        let (q, c) = states[id];
        let c2 = if k > 0 && q != 0 && sets[c][q] { (c + 1) % k } else { c };
        for &q2 in &succ[q] {
            let key = (q2, c2);
            let dst = *ids.entry(key).or_insert_with(|| {
                states.push(key);
                queue.push_back(states.len() - 1);
                states.len() - 1
            });
            edges.push(BuchiEdge { src: id, label: labels[q2].clone(), dst });
        }
    }
    let accepting =
        states.iter().map(|&(q, c)| q != 0 && (k == 0 || (c == 0 && sets[0][q]))).collect::<Vec<_>>();
    let mut outgoing = vec![Vec::new(); states.len()];
    for (i, e) in edges.iter().enumerate() {
        outgoing[e.src].push(i);
    }
    Buchi { atoms, nodes: states.len(), edges, outgoing, accepting }
}
