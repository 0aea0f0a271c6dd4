mod support;

use rand::rngs::StdRng;
use rand::SeedableRng;
use support::oracle::{holds_on, is_lasso_of, oracle_check};
use support::random;
use vo_core::ltl::{check_kripke, parse_ltl, Ltl};

#[test]
fn checker_agrees_with_lasso_enumeration() {
    let mut rng = StdRng::seed_from_u64(7);
    for case in 0..600 {
        let g = random::graph(&mut rng, 6);
        let f = random::formula(&mut rng, 3);
        let val = |a: &_, t| g.val(a, t);
        let mut v = |a: &_, t| Ok::<_, ()>(g.val(a, t));
        let got = check_kripke(&g.kripke, &f, &mut v).unwrap();
        let want = oracle_check(&g.kripke, &f, &val, 12).unwrap();
        assert_eq!(got.is_some(), want.is_some(), "case {case}: {f} on {g:?}; checker {got:?} oracle {want:?}");
        if let Some(l) = got {
            assert!(is_lasso_of(&g.kripke, &l), "case {case}: malformed lasso {l:?}");
            assert!(!holds_on(&f, &l, &val), "case {case}: lasso {l:?} satisfies {f}");
        }
    }
}

#[test]
fn globally_is_dual_to_finally() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..200 {
        let g = random::graph(&mut rng, 6);
        let p = random::formula(&mut rng, 2);
        let mut v = |a: &_, t| Ok::<_, ()>(g.val(a, t));
        let a = check_kripke(&g.kripke, &Ltl::globally(p.clone()), &mut v).unwrap().is_some();
        let b = check_kripke(&g.kripke, &Ltl::not(Ltl::finally(Ltl::not(p))), &mut v).unwrap().is_some();
        assert_eq!(a, b);
    }
}

#[test]
fn deterministic_path_decides_exactly_one_of_f_and_not_f() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..200 {
        let mut g = random::graph(&mut rng, 5);
        // Keep one successor per state and a single initial state.
        for out in &mut g.kripke.outgoing {
            out.truncate(1);
        }
        g.kripke.initial.truncate(1);
        let f = random::formula(&mut rng, 3);
        let mut v = |a: &_, t| Ok::<_, ()>(g.val(a, t));
        let pos = check_kripke(&g.kripke, &f, &mut v).unwrap().is_none();
        let neg = check_kripke(&g.kripke, &Ltl::not(f.clone()), &mut v).unwrap().is_none();
        assert!(pos != neg, "{f}");
    }
}

#[test]
fn oracle_sanity() {
    let g = random::LabeledGraph {
        kripke: vo_core::ltl::Kripke { initial: vec![0], edges: vec![(0, 0)], outgoing: vec![vec![0]] },
        events: vec!["a"],
        props: vec![[true, false]],
    };
    let val = |a: &_, t| g.val(a, t);
    assert_eq!(oracle_check(&g.kripke, &parse_ltl("G {p}").unwrap(), &val, 4).unwrap(), None);
    assert!(oracle_check(&g.kripke, &parse_ltl("F {q}").unwrap(), &val, 4).unwrap().is_some());
    assert!(oracle_check(&g.kripke, &Ltl::True, &val, 0).is_err());
}
