mod common;

use common::*;
use proptest::prelude::*;
use qitrs::ordering::{
    canonical_precedence, check_program, compare, infer_precedence, program_precedence, Mode, Precedence,
};
use qitrs::{parse_program, Error, Program, Term};

fn running() -> Program {
    load("running.trs")
}

#[test]
fn hand_derived_comparisons() {
    let p = running();
    let sig = &p.signature;
    let ppo = canonical_precedence(&p, Mode::Ppo);
    let eppo = canonical_precedence(&p, Mode::Eppo);
    assert!(compare(sig, &ppo, &term(&p, "s1 x"), &term(&p, "s0 s1 x")));
    assert!(!compare(sig, &ppo, &term(&p, "s1 x"), &term(&p, "s0 s0 x")));
    assert!(compare(sig, &eppo, &term(&p, "s1 x"), &term(&p, "s0 s0 x")));
    for t in ["s1 x", "f(s0 x)", "append(x, y)", "nil"] {
        assert!(!compare(sig, &ppo, &term(&p, t), &term(&p, t)));
        assert!(!compare(sig, &eppo, &term(&p, t), &term(&p, t)));
    }
}

#[test]
fn running_example_verdicts() {
    let p = running();
    let v = check_program(&p, &program_precedence(&p, Mode::Ppo).unwrap(), Mode::Ppo).unwrap();
    assert!(!v.overall);
    assert_eq!(v.per_equation.iter().filter(|e| !e.decreasing).count(), 1);
    assert!(!v.per_equation[0].decreasing);
    assert!(v.per_equation[0].failing_subgoal.as_ref().is_some_and(|g| !g.is_empty()));
    assert_eq!(v.overall, v.per_equation.iter().all(|e| e.decreasing));
    let v = check_program(&p, &program_precedence(&p, Mode::Eppo).unwrap(), Mode::Eppo).unwrap();
    assert!(v.overall);
    let append = load("append.trs");
    assert!(check_program(&append, &canonical_precedence(&append, Mode::Ppo), Mode::Ppo).unwrap().overall);
    let b = qitrs::blind::blind_program(&p).unwrap();
    assert!(infer_precedence(&b.program, Mode::Ppo).is_some());
}

#[test]
fn inferred_precedences() {
    let p = running();
    let prec = infer_precedence(&p, Mode::Eppo).unwrap();
    let (f, append) = (sym(&p, "f"), sym(&p, "append"));
    assert!(prec.lt(append, f));
    assert!(prec.equiv(sym(&p, "s0"), sym(&p, "s1")));
    let a = prec.attributes(&p);
    assert!(a.separating && a.compatible && a.fair && !a.strict_ctors);
    let strict = canonical_precedence(&p, Mode::Ppo);
    assert!(!strict.equiv(sym(&p, "s0"), sym(&p, "s1")));
    assert!(strict.attributes(&p).strict_ctors);
    assert!(infer_precedence(&p, Mode::Ppo).is_none());

    let flat = parse_program("constructors: a/0 b/0\nfunctions: f/1 g/1\nf(x) -> a\ng(x) -> b\nmain: f\n").unwrap();
    let prec = infer_precedence(&flat, Mode::Ppo).unwrap();
    assert!(!prec.lt(sym(&flat, "f"), sym(&flat, "g")) && !prec.lt(sym(&flat, "g"), sym(&flat, "f")));

    let add = qitrs::bc::compile(&qitrs::bc::parse_bc(&read("add.bc")).unwrap()).unwrap();
    let prec = infer_precedence(&add.program, Mode::Ppo).unwrap();
    let rec = add.provenance.iter().find(|s| s.kind == "rec").unwrap().symbol;
    for s in &add.provenance {
        if s.symbol != rec && s.source.len() < add.provenance.iter().find(|s| s.kind == "rec").unwrap().source.len() {
            assert!(prec.lt(s.symbol, rec), "{} not below the recursion", s.source);
        }
    }
}

#[test]
fn precedence_text() {
    let p = running();
    let prec = Precedence::parse(&p.signature, "append < f ; s0 ~ s1", Mode::Eppo).unwrap();
    assert!(prec.lt(sym(&p, "append"), sym(&p, "f")));
    assert!(check_program(&p, &prec, Mode::Eppo).unwrap().overall);
    assert!(matches!(
        Precedence::parse(&p.signature, "f ~ nil", Mode::Eppo),
        Err(Error::InvalidPrecedence(_))
    ));
    assert!(matches!(
        Precedence::parse(&p.signature, "f < append ; append < f", Mode::Eppo),
        Err(Error::InvalidPrecedence(_))
    ));
    let back = Precedence::parse(&p.signature, &prec.to_text(&p.signature), Mode::Eppo).unwrap();
    assert_eq!(back, prec);
}

#[test]
fn blinding_preserves_ppo_and_eppo_equivalence() {
    for (name, p) in corpus() {
        let Ok(b) = qitrs::blind::blind_program(&p) else { continue };
        let check = |q: &Program, m: Mode| check_program(q, &program_precedence(q, m).unwrap(), m).unwrap().overall;
        if check(&p, Mode::Ppo) {
            assert!(check(&b.program, Mode::Ppo), "{name}");
        }
        let e = check(&p, Mode::Eppo);
        assert_eq!(e, check(&b.program, Mode::Eppo), "{name}");
        assert_eq!(e, check(&b.program, Mode::Ppo), "{name}");
    }
}

fn arb_term(depth: u32) -> impl Strategy<Value = String> {
    let leaf = prop_oneof![Just("nil".to_string()), Just("x".to_string()), Just("y".to_string())];
    leaf.prop_recursive(depth, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| format!("s0({t})")),
            inner.clone().prop_map(|t| format!("s1({t})")),
            inner.clone().prop_map(|t| format!("f({t})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("append({a}, {b})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ordering_laws(a in arb_term(4), b in arb_term(4), c in arb_term(4)) {
        let p = running();
        let sig = &p.signature;
        let (a, b, c) = (term(&p, &a), term(&p, &b), term(&p, &c));
        for mode in [Mode::Ppo, Mode::Eppo] {
            let prec = canonical_precedence(&p, mode);
            prop_assert!(!compare(sig, &prec, &a, &a));
            if compare(sig, &prec, &a, &b) && compare(sig, &prec, &b, &c) {
                prop_assert!(compare(sig, &prec, &a, &c));
            }
            prop_assert!(!(compare(sig, &prec, &a, &b) && compare(sig, &prec, &b, &a)));
        }
        if compare(sig, &canonical_precedence(&p, Mode::Ppo), &a, &b) {
            prop_assert!(compare(sig, &canonical_precedence(&p, Mode::Eppo), &a, &b));
        }
    }

    #[test]
    fn proper_subterms_are_smaller(a in arb_term(5)) {
        let p = running();
        let t = term(&p, &a);
        let mut subs = Vec::new();
        subterms(&t, &mut subs);
        for s in subs.iter().filter(|s| **s != t) {
            for mode in [Mode::Ppo, Mode::Eppo] {
                prop_assert!(compare(&p.signature, &canonical_precedence(&p, mode), s, &t));
            }
        }
        let _: &Term = &t;
    }
}
