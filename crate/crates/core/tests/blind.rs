mod common;

use common::*;
use qitrs::blind::{
    attach_bound, blind_program, blind_proof, classify_growth, is_linear, measure_strong_poly, rule_count_bound,
    transfer_uniform_qi, Growth, MeasureConfig, BLIND_PREFIX,
};
use qitrs::ordering::{check_program, program_precedence, Mode};
use qitrs::qi::{check_qi, QiAssignment, DEFAULT_SEED};
use qitrs::semantics::{eval_cbv, eval_first, validate, Budget, ChoicePolicy};
use qitrs::{parse_program, Error, Program, Term};

fn unary(p: &Program, n: usize) -> Term {
    let mut t = term(p, "0");
    for _ in 0..n {
        t = Term::App(sym(p, "s"), vec![t]);
    }
    t
}

#[test]
fn running_example_image() {
    let p = load("running.trs");
    let b = blind_program(&p).unwrap();
    assert_eq!(b.program.equations.len(), 7);
    assert_eq!(b.duplicates, vec![(0, 1), (4, 5)]);
    assert_eq!(b.deduplicated().unwrap().equations.len(), 5);
    assert_eq!(b.program.signature.name(b.program.main), format!("{BLIND_PREFIX}f"));
    let expected = load("running_blind.trs");
    assert_eq!(b.deduplicated().unwrap().to_text(), expected.to_text());
    let image = b.map_term(&term(&p, "f(s0 s1 nil)"));
    assert_eq!(image, term(&b.program, "bl_f(s s 0)"));
}

#[test]
fn unary_programs_are_isomorphic() {
    let p = parse_program("constructors: s/1 z/0\nfunctions: g/1\ng(s x) -> g(x)\ng(z) -> z\nmain: g\n").unwrap();
    let b = blind_program(&p).unwrap();
    assert!(b.duplicates.is_empty());
    assert_eq!(b.program.equations.len(), p.equations.len());
    for args in inputs_up_to(&p, p.main, 6) {
        let t = Term::App(p.main, args);
        let r = eval_first(&p, &t, Budget::default()).unwrap();
        let rb = eval_first(&b.program, &b.map_term(&t), Budget::default()).unwrap();
        assert_eq!(b.map_term(r.result()), *rb.result());
        assert_eq!(r.stats.rule_count, rb.stats.rule_count);
    }
}

#[test]
fn binary_constructors_are_rejected() {
    assert!(matches!(blind_program(&load("tree.trs")), Err(Error::NotBlindable(_))));
}

#[test]
fn linearity() {
    let p = load("running.trs");
    let prec = program_precedence(&p, Mode::Eppo).unwrap();
    let r = is_linear(&p, &prec);
    assert!(!r.linear);
    let f = r.per_function.iter().find(|f| f.function == "f").unwrap();
    assert_eq!(f.witness, Some(0));
    let a = load("append.trs");
    assert!(is_linear(&a, &program_precedence(&a, Mode::Ppo).unwrap()).linear);
}

#[test]
fn uniform_assignments_transfer() {
    let p = load("append.trs");
    let a = QiAssignment::from_program(&p).unwrap().unwrap();
    let b = blind_program(&p).unwrap();
    let bq = transfer_uniform_qi(&a, &p, &b).unwrap();
    assert!(check_qi(&b.program, &bq, DEFAULT_SEED).is_valid());
    let skew = QiAssignment::parse(&p.signature, "qi s0(X) = X + 1\nqi s1(X) = X + 2\nqi nil = 1\nqi append(X, Y) = X + Y").unwrap();
    assert!(matches!(transfer_uniform_qi(&skew, &p, &b), Err(Error::NonUniformAssignment(_))));
}

#[test]
fn blind_running_grows_exponentially() {
    let p = load("running.trs");
    let b = blind_program(&p).unwrap();
    let bp = &b.program;
    let t = measure_strong_poly(bp, bp.main, 2..=8, Budget::default(), MeasureConfig::default()).unwrap();
    assert_eq!(t.rows.len(), 7);
    let mut oracle = Oracle::new(bp);
    for r in &t.rows {
        assert!(!r.truncated);
        assert_eq!(r.worst_result_size, 1 << (r.n - 2), "n = {}", r.n);
        let derivable = oracle.results(&Term::App(bp.main, vec![unary(bp, r.n)]));
        let worst = derivable.iter().map(|v| unary_count(&bp.signature, v)).max().unwrap();
        assert_eq!(r.worst_result_size, worst);
    }
    assert_eq!(classify_growth(&t.series(|r| r.worst_result_size as f64)), Growth::ExponentialConsistent);
    assert!(t.to_csv().starts_with("n,worst_rules"));
}

#[test]
fn blind_append_is_polynomial() {
    let p = load("append.trs");
    let b = blind_program(&p).unwrap();
    let bp = &b.program;
    let t = measure_strong_poly(bp, bp.main, 1..=10, Budget::default(), MeasureConfig::default()).unwrap();
    for r in &t.rows {
        assert_eq!(r.worst_result_size, r.n);
        // exhaustive derivations over every split of n between the two arguments
        let mut worst = 0;
        for k in 0..=r.n {
            let call = Term::App(bp.main, vec![unary(bp, k), unary(bp, r.n - k)]);
            let ev = eval_cbv(bp, &call, ChoicePolicy::Exhaustive, Budget::default()).unwrap();
            worst = worst.max(ev.proofs.iter().map(|d| d.stats.rule_count).max().unwrap());
        }
        assert_eq!(r.worst_rules, worst, "n = {}", r.n);
    }
    assert_eq!(classify_growth(&t.series(|r| r.worst_rules as f64)), Growth::PolynomialConsistent);
}

#[test]
fn derivations_map_to_blind_derivations() {
    for (name, p) in corpus() {
        let Ok(b) = blind_program(&p) else { continue };
        let mut oracle = Oracle::new(&b.program);
        for args in inputs_up_to(&p, p.main, 5) {
            let t = Term::App(p.main, args);
            let Ok(proof) = eval_first(&p, &t, Budget::default()) else { continue };
            let image = blind_proof(&b, &proof);
            assert_eq!(image.stats.rule_count, proof.stats.rule_count, "{name}");
            validate(&b.program, &image).unwrap_or_else(|e| panic!("{name}: {e}"));
            // the blind result is derivable, so the blind worst case dominates
            let results = oracle.results(&b.map_term(&t));
            assert!(results.contains(&b.map_term(proof.result())), "{name}");
            let worst = results.iter().map(|v| unary_count(&b.program.signature, v)).max().unwrap();
            assert!(unary_count(&p.signature, proof.result()) <= worst, "{name}");
        }
    }
}

#[test]
fn assembled_bound_covers_certified_programs() {
    let mut covered = 0;
    for (name, p) in corpus() {
        let Ok(Some(a)) = QiAssignment::from_program(&p) else { continue };
        let Ok(prec) = program_precedence(&p, Mode::Ppo) else { continue };
        if !check_program(&p, &prec, Mode::Ppo).unwrap().overall
            || !check_qi(&p, &a, DEFAULT_SEED).is_valid()
            || !is_linear(&p, &prec).linear
        {
            continue;
        }
        let Ok(b) = blind_program(&p) else { continue };
        let bq = transfer_uniform_qi(&a, &p, &b).unwrap();
        let bprec = program_precedence(&b.program, Mode::Ppo).unwrap();
        let mut t = measure_strong_poly(&b.program, b.program.main, 1..=6, Budget::default(), MeasureConfig::default()).unwrap();
        attach_bound(&mut t, &b.program, &bq, &bprec).unwrap();
        for r in &t.rows {
            assert_eq!(r.within_bound, Some(true), "{name} at n = {}", r.n);
        }
        let grows = (1..6).all(|n| {
            rule_count_bound(&b.program, &bq, &bprec, n).unwrap() <= rule_count_bound(&b.program, &bq, &bprec, n + 1).unwrap()
        });
        assert!(grows, "{name}");
        covered += 1;
    }
    assert!(covered >= 2, "{covered}");
}

#[test]
fn growth_classifier_cases() {
    let series = |f: &dyn Fn(f64) -> f64| (1..=10).map(|n| (n, f(n as f64))).collect::<Vec<_>>();
    for (c, d) in [(0.0, 1), (3.0, 1), (50.0, 1), (0.0, 2), (7.0, 2), (1.0, 3)] {
        let s = series(&|n| n.powi(d) + c);
        assert_eq!(classify_growth(&s), Growth::PolynomialConsistent, "n^{d} + {c}");
    }
    for b in [2.0, 3.0] {
        assert_eq!(classify_growth(&series(&|n| f64::powf(b, n))), Growth::ExponentialConsistent, "{b}^n");
    }
    assert_eq!(classify_growth(&series(&|_| 4.0)), Growth::PolynomialConsistent);
    assert_eq!(classify_growth(&[(1, 1.0), (2, 2.0)]), Growth::Inconclusive);
}
