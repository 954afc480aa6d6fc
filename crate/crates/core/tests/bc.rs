mod common;

use common::*;
use proptest::prelude::*;
use qitrs::bc::{auto_qi, compile, parse_bc, random_bc, BcTerm};
use qitrs::qi::{check_qi, rat, QiExpr, DEFAULT_SEED};
use qitrs::semantics::{eval_first, Budget};
use qitrs::{Error, Program, Term};

fn run(p: &Program, normal: &[Vec<u8>], safe: &[Vec<u8>]) -> Vec<u8> {
    let args = normal.iter().chain(safe).map(|w| bits_to_term(p, w)).collect();
    let proof = eval_first(p, &Term::App(p.main, args), Budget::default()).unwrap();
    term_to_bits(p, proof.result())
}

fn term_to_bits(p: &Program, t: &Term) -> Vec<u8> {
    let mut out = Vec::new();
    let mut cur = t;
    while let Term::App(f, args) = cur {
        match p.signature.name(*f) {
            "s0" => out.push(0),
            "s1" => out.push(1),
            _ => break,
        }
        cur = &args[0];
    }
    out
}

fn number(bits: &[u8]) -> usize {
    bits.len()
}

#[test]
fn text_round_trip() {
    let t = parse_bc(&read("add.bc")).unwrap();
    assert_eq!(t.arity().unwrap(), (1, 1));
    assert_eq!(parse_bc(&t.to_sexpr()).unwrap(), t);
    assert_eq!(t.depth(), 2);
    for seed in 0..50 {
        let r = random_bc(seed, 3);
        assert_eq!(parse_bc(&r.to_sexpr()).unwrap(), r, "seed {seed}");
    }
    assert!(matches!(parse_bc("(succ 2)"), Err(Error::BcArity(_))));
    assert!(matches!(parse_bc("(proj 1 1 3)"), Err(Error::BcArity(_))));
    assert!(parse_bc("(saferec (zero)").is_err());
    assert!(matches!(parse_bc("(frobnicate)"), Err(Error::Syntax { .. })));
}

#[test]
fn initial_function_rules() {
    let pred = compile(&BcTerm::Pred).unwrap();
    assert_eq!(pred.program.equations.len(), 3);
    let cond = compile(&BcTerm::Cond).unwrap();
    assert_eq!(cond.program.equations.len(), 3);
    let p = &cond.program;
    for (sel, want) in [(vec![], vec![0u8]), (vec![0], vec![0]), (vec![1, 1], vec![1, 1, 1])] {
        assert_eq!(run(p, &[], &[sel, vec![0], vec![1, 1, 1]]), want);
    }
    let f = pred.program.main;
    assert_eq!(pred.qi.get(f), Some(&QiExpr::Arg(0)));
}

#[test]
fn addition_matches_arithmetic() {
    let t = parse_bc(&read("add.bc")).unwrap();
    let c = compile(&t).unwrap();
    for a in all_bits(5) {
        for b in all_bits(3) {
            let got = run(&c.program, std::slice::from_ref(&a), std::slice::from_ref(&b));
            assert_eq!(number(&got), number(&a) + number(&b));
            assert_eq!(got, bc_eval(&t, std::slice::from_ref(&a), std::slice::from_ref(&b)));
        }
    }
    let q = auto_qi(&t).unwrap();
    assert!(check_qi(&c.program, &q, DEFAULT_SEED).is_valid());
    // q(normals) + max(safes): one more in the safe argument adds exactly one,
    // and the entry dominates the interpretation of the actual result
    let e = q.get(c.program.main).unwrap();
    for x in 1..8i64 {
        for y in 1..8i64 {
            assert_eq!(e.eval(&[rat(x), rat(y + 1)]) - e.eval(&[rat(x), rat(y)]), rat(1));
            assert!(e.eval(&[rat(x), rat(y)]) >= rat(x + y - 1));
        }
    }
}

#[test]
fn generated_terms() {
    let leaf = random_bc(1, 0);
    assert_eq!(leaf.depth(), 0);
    let t = random_bc(7, 3);
    assert!(t.depth() <= 3);
    let c = compile(&t).unwrap();
    assert!(!c.program.signature.functions().is_empty());
    assert_eq!(random_bc(7, 3), t);
    for p in &c.provenance {
        assert!(c.program.signature.name(p.symbol).starts_with(&format!("bc_{}_", p.kind)));
    }
}

#[test]
fn initial_functions_are_exhaustively_correct() {
    let words = all_bits(6);
    let cases = [
        BcTerm::Pred,
        BcTerm::Succ(0),
        BcTerm::Succ(1),
        BcTerm::Proj { n: 1, m: 1, j: 1 },
        BcTerm::Proj { n: 1, m: 1, j: 2 },
    ];
    for t in cases {
        let c = compile(&t).unwrap();
        let (n, m) = t.arity().unwrap();
        for args in product(&vec![words.clone(); n + m]) {
            assert_eq!(run(&c.program, &args[..n], &args[n..]), bc_eval(&t, &args[..n], &args[n..]), "{}", t.to_sexpr());
        }
    }
    let cond = compile(&BcTerm::Cond).unwrap();
    let small = all_bits(3);
    for args in product(&vec![small; 3]) {
        assert_eq!(run(&cond.program, &[], &args), bc_eval(&BcTerm::Cond, &[], &args));
    }
}

#[test]
fn ill_formed_terms_are_rejected() {
    let bad_rec = BcTerm::SafeRec {
        g: Box::new(BcTerm::Zero),
        h0: Box::new(BcTerm::Pred),
        h1: Box::new(BcTerm::Pred),
    };
    assert!(matches!(compile(&bad_rec), Err(Error::BcArity(_))));
    let bad_comp = BcTerm::SafeComp {
        n: 0,
        m: 1,
        g: Box::new(BcTerm::Cond),
        hs: vec![],
        ls: vec![BcTerm::Pred],
    };
    assert!(matches!(compile(&bad_comp), Err(Error::BcArity(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn compiled_terms_agree_with_reference(seed in 0u64..10_000, inputs in proptest::collection::vec(proptest::collection::vec(0u8..2, 0..4), 4)) {
        let t = random_bc(seed, 3);
        let c = compile(&t).unwrap();
        let (n, m) = t.arity().unwrap();
        let args = &inputs[..n + m];
        prop_assert_eq!(run(&c.program, &args[..n], &args[n..]), bc_eval(&t, &args[..n], &args[n..]));
        prop_assert!(check_qi(&c.program, &c.qi, DEFAULT_SEED).is_valid());
    }
}
