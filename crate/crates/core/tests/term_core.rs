mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use qitrs::term::{apply_subst, match_pattern, match_patterns, matching_equations};
use qitrs::{parse_program, Error, Program, Term};

#[test]
fn running_example_shape() {
    let p = load("running.trs");
    assert_eq!(p.signature.functions().len(), 2);
    assert_eq!(p.signature.constructors().len(), 3);
    assert_eq!(p.equations.len(), 7);
    let sizes: Vec<usize> = p.equations.iter().map(|e| size(&e.rhs)).collect();
    assert_eq!(sizes, vec![7, 7, 1, 1, 4, 4, 1]);
    assert_eq!(p.signature.name(p.main), "f");
    assert!(p.is_word_program());
    assert!(p.is_orthogonal());
}

#[test]
fn identity_program() {
    let p = parse_program("constructors: nil/0\nfunctions: f/1\nf(x) -> x\nmain: f\n").unwrap();
    assert_eq!(p.equations.len(), 1);
}

#[test]
fn unbound_rhs_variable_is_rejected() {
    let e = parse_program("constructors: nil/0\nfunctions: f/1 g/1\nf(x) -> g(y)\ng(x) -> x\nmain: f\n").unwrap_err();
    assert!(matches!(e, Error::UnboundVariable(ref v) if v.starts_with("y ")), "{e:?}");
}

#[test]
fn parse_errors_carry_positions() {
    let e = parse_program("constructors: nil/0\nfunctions: f/1\nf(x -> x\nmain: f\n").unwrap_err();
    match e {
        Error::Syntax { line, .. } => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    let e = parse_program("constructors: nil/0\nfunctions: f/1\nf(x, x) -> x\nmain: f\n").unwrap_err();
    assert!(matches!(e, Error::ArityMismatch { .. }), "{e:?}");
}

#[test]
fn matching_examples() {
    let p = load("running.trs");
    let s = match_pattern(&term(&p, "s0 s1 x"), &term(&p, "s0 s1 nil")).unwrap();
    assert_eq!(s.get("x"), Some(&term(&p, "nil")));
    assert!(match_pattern(&term(&p, "s1 x"), &term(&p, "s0 nil")).is_none());
    let pair = parse_program("constructors: nil/0 s0/1 c/2\nfunctions: f/1\nf(x) -> x\nmain: f\n").unwrap();
    assert!(match_pattern(&term(&pair, "c(x, x)"), &term(&pair, "c(nil, s0 nil)")).is_none());
    assert!(match_pattern(&term(&pair, "c(x, x)"), &term(&pair, "c(s0 nil, s0 nil)")).is_some());
    assert!(match_patterns(&[term(&p, "x"), term(&p, "nil")], &[term(&p, "nil"), term(&p, "s0 nil")]).is_none());
}

#[test]
fn substitution_examples() {
    let p = load("running.trs");
    let sigma: BTreeMap<String, Term> = [("x".to_string(), term(&p, "nil"))].into();
    assert_eq!(
        apply_subst(&term(&p, "append(f(s1 x), f(s1 x))"), &sigma).unwrap(),
        term(&p, "append(f(s1 nil), f(s1 nil))")
    );
    assert_eq!(apply_subst(&term(&p, "x"), &sigma).unwrap(), term(&p, "nil"));
    let sigma: BTreeMap<String, Term> = [("x".to_string(), term(&p, "s1 nil"))].into();
    assert_eq!(apply_subst(&term(&p, "s0(x)"), &sigma).unwrap(), term(&p, "s0(s1(nil))"));
    assert!(matches!(
        apply_subst(&term(&p, "y"), &sigma),
        Err(Error::UnboundVariable(_))
    ));
}

#[test]
fn size_and_depth() {
    let p = load("running.trs");
    assert_eq!(term(&p, "nil").size(), 1);
    assert_eq!(term(&p, "s0(s1(nil))").size(), 3);
    assert_eq!(term(&p, "append(nil, nil)").depth(), 2);
}

#[test]
fn matching_equation_examples() {
    let p = load("running.trs");
    let m = matching_equations(&p, &term(&p, "f(s1 nil)")).unwrap();
    assert_eq!(m.len(), 1);
    assert_eq!(m[0].0.index, 2);
    let b = load("running_blind.trs");
    assert_eq!(matching_equations(&b, &term(&b, "bl_f(s s 0)")).unwrap().len(), 2);
    let partial = parse_program("constructors: nil/0 a/0\nfunctions: f/1\nf(nil) -> nil\nmain: f\n").unwrap();
    assert!(matching_equations(&partial, &term(&partial, "f(a)")).unwrap().is_empty());
    assert!(matches!(
        matching_equations(&p, &term(&p, "f(f(nil))")),
        Err(Error::NotACall(_))
    ));
}

#[test]
fn corpus_round_trips() {
    for (name, p) in corpus() {
        let back = parse_program(&p.to_text()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(back.equations, p.equations, "{name}");
        assert_eq!(back.main, p.main, "{name}");
        assert_eq!(back.to_text(), p.to_text(), "{name}");
    }
}

fn arb_value(p: &Program) -> impl Strategy<Value = Term> {
    let sig = p.signature.clone();
    (1usize..9).prop_flat_map(move |n| {
        let vals = values_of_size(&sig, n);
        (0..vals.len()).prop_map(move |i| vals[i].clone())
    })
}

proptest! {
    #[test]
    fn match_then_apply_round_trips(v in arb_value(&load("running.trs")), cut in 0usize..4) {
        let p = load("running.trs");
        // turn the value into a pattern by replacing the subterm at depth `cut` with x
        fn hole(t: &Term, d: usize) -> Term {
            match t {
                Term::App(f, args) if d > 0 && !args.is_empty() => Term::App(*f, vec![hole(&args[0], d - 1)]),
                _ => Term::var("x"),
            }
        }
        let pat = hole(&v, cut);
        let sigma = match_pattern(&pat, &v).expect("pattern built from the value matches it");
        prop_assert_eq!(apply_subst(&pat, &sigma).unwrap(), v);
        let _ = &p;
    }

    #[test]
    fn substitution_never_shrinks(v in arb_value(&load("running.trs"))) {
        let p = load("running.trs");
        for e in &p.equations {
            let sigma: BTreeMap<String, Term> = e.lhs_vars().into_iter().map(|x| (x, v.clone())).collect();
            let inst = apply_subst(&e.rhs, &sigma).unwrap();
            prop_assert!(size(&inst) >= size(&e.rhs));
        }
    }
}
