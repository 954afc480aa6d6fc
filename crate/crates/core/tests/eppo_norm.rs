mod common;

use common::*;
use qitrs::blind::{blind_program, Growth, MeasureConfig};
use qitrs::call_struct::call_dag;
use qitrs::eppo::{
    certify_extended, check_strict_descent, compositions_count, is_normal, measure_bounded_values, normalize,
    normalize_with_cap, production_profile, same_class_descendant_bound, ExtendedConfig, ExtendedOverall,
    LabelledDag,
};
use qitrs::ordering::{check_program, program_precedence, Mode};
use qitrs::qi::{parse_expr, QiAssignment};
use qitrs::semantics::{eval_first, eval_memo, Budget};
use qitrs::{parse_program, Error, Program, Term};

fn eppo_prec(p: &Program) -> qitrs::ordering::Precedence {
    program_precedence(p, Mode::Eppo).unwrap()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, j| acc * (n - j) / (j + 1))
}

#[test]
fn production_profiles() {
    let p = load("normalize_example.trs");
    let prec = eppo_prec(&p);
    let prof = production_profile(&p, &prec).unwrap();
    assert_eq!(prof.per_equation, vec![2, 0]);
    assert_eq!(prof.of_function(&prec, sym(&p, "f")), 2);
    let r = load("running.trs");
    let prof = production_profile(&r, &eppo_prec(&r)).unwrap();
    assert_eq!(prof.of_function(&eppo_prec(&r), sym(&r, "f")), 1);
    assert_eq!(prof.of_function(&eppo_prec(&r), sym(&r, "append")), 0);
    assert!(matches!(
        production_profile(&load("tree.trs"), &eppo_prec(&load("tree.trs"))),
        Err(Error::NotWordProgram(_))
    ));
}

#[test]
fn normality() {
    let p = load("normalize_example.trs");
    let r = is_normal(&p, &eppo_prec(&p)).unwrap();
    assert!(!r.normal);
    assert_eq!(r.witnesses.len(), 1);
    let w = &r.witnesses[0];
    assert_eq!((w.equation, w.argument, w.length, w.required), (1, 0, 1, 2));
    let running = load("running.trs");
    assert!(is_normal(&running, &eppo_prec(&running)).unwrap().normal);
}

#[test]
fn normalization_fixpoints() {
    let p = load("normalize_example.trs");
    let prec = eppo_prec(&p);
    let n = normalize(&p, &prec).unwrap();
    assert!(n.rounds >= 1);
    assert!(!n.added.is_empty());
    assert_eq!(n.removed, vec!["f(s0 x) -> f(x)".to_string()]);
    let again = normalize(&n.program, &prec).unwrap();
    assert_eq!(again.rounds, 0);
    assert_eq!(again.program.to_text(), n.program.to_text());

    let running = load("running.trs");
    let n = normalize(&running, &eppo_prec(&running)).unwrap();
    assert_eq!(n.rounds, 0);
    assert_eq!(n.program.to_text(), running.to_text());

    assert!(matches!(normalize_with_cap(&p, &prec, 1), Err(Error::NormalizationCap(1))));
    let climbing = parse_program("constructors: s/1 z/0\nfunctions: g/1\ng(s x) -> g(s s x)\ng(z) -> z\nmain: g\n").unwrap();
    assert!(matches!(normalize(&climbing, &eppo_prec(&climbing)), Err(Error::NotEppoOrdered(_))));
}

#[test]
fn normalization_preserves_order_and_results() {
    let mut checked = 0;
    for (name, p) in corpus() {
        if !p.is_word_program() {
            continue;
        }
        let Ok(prec) = program_precedence(&p, Mode::Eppo) else { continue };
        if !check_program(&p, &prec, Mode::Eppo).unwrap().overall {
            continue;
        }
        let Ok(n) = normalize(&p, &prec) else { continue };
        let q = &n.program;
        assert!(check_program(q, &prec, Mode::Eppo).unwrap().overall, "{name}");
        assert!(is_normal(q, &prec).unwrap().normal, "{name}");
        let (mut oa, mut ob) = (Oracle::new(&p), Oracle::new(q));
        for args in inputs_up_to(&p, p.main, 5) {
            let t = Term::App(p.main, args);
            assert_eq!(oa.results(&t), ob.results(&t), "{name} on {}", p.show(&t));
            if p.is_orthogonal() && q.is_orthogonal() {
                // instantiation keeps each derivation rule for rule
                let (a, b) = (eval_first(&p, &t, Budget::default()), eval_first(q, &t, Budget::default()));
                if let (Ok(a), Ok(b)) = (a, b) {
                    assert_eq!(a.stats.rule_count, b.stats.rule_count, "{name}");
                }
            }
        }
        checked += 1;
    }
    assert!(checked >= 10, "{checked}");
}

#[test]
fn same_class_calls_descend_strictly() {
    for name in ["running.trs", "fiblike.trs", "normalize_example.trs", "droptwo.trs"] {
        let p = load(name);
        let prec = eppo_prec(&p);
        for args in inputs_up_to(&p, p.main, 7) {
            let t = Term::App(p.main, args);
            let Ok(proof) = eval_memo(&p, &t, Budget::default(), false) else { continue };
            let dag = call_dag(&p, &proof).unwrap();
            assert!(check_strict_descent(&p, &dag, &prec).is_empty(), "{name}");
        }
    }
}

#[test]
fn chain_descendants_and_paths() {
    let p = parse_program("constructors: s/1 z/0\nfunctions: g/1\ng(s x) -> g(x)\ng(z) -> z\nmain: g\n").unwrap();
    let prec = eppo_prec(&p);
    let mut v = term(&p, "z");
    for _ in 0..6 {
        v = Term::App(sym(&p, "s"), vec![v]);
    }
    let proof = eval_memo(&p, &Term::App(p.main, vec![v]), Budget::default(), false).unwrap();
    let dag = call_dag(&p, &proof).unwrap();
    assert_eq!(dag.len(), 7);
    let ld = LabelledDag::new(&p, &dag, &prec);
    let root = dag.roots[0];
    let last = (0..dag.len()).find(|&n| dag.children(n).is_empty()).unwrap();
    let word = ld.path_word(root, last).unwrap();
    assert_eq!(word.len(), 6);
    assert_eq!(ld.follow(root, &word), Some(last));
    let b = same_class_descendant_bound(&p, &ld, &prec, root);
    assert_eq!((b.count, b.i, b.labels), (6, 6, 1));
    assert!(b.holds && b.branch_holds && b.longest_branch == 6);
}

#[test]
fn blind_running_descendants_are_bounded() {
    let b = blind_program(&load("running.trs")).unwrap();
    let p = b.deduplicated().unwrap();
    let prec = eppo_prec(&p);
    let mut v = term(&p, "0");
    for _ in 0..6 {
        v = Term::App(sym(&p, "s"), vec![v]);
    }
    let proof = eval_memo(&p, &Term::App(p.main, vec![v]), Budget::default(), true).unwrap();
    let dag = call_dag(&p, &proof).unwrap();
    let ld = LabelledDag::new(&p, &dag, &prec);
    for n in 0..dag.len() {
        let d = same_class_descendant_bound(&p, &ld, &prec, n);
        assert!(d.holds && d.branch_holds, "{d:?}");
    }
}

#[test]
fn composition_counts() {
    for n in 1..5 {
        for i in 0..7 {
            assert_eq!(compositions_count(n, i), binomial(i + n - 1, n - 1), "n={n} i={i}");
        }
    }
    assert_eq!(compositions_count(0, 0), 1);
    assert_eq!(compositions_count(0, 3), 0);
}

#[test]
fn bounded_value_tables() {
    let p = load("append.trs");
    let poly = parse_expr("X + 3", &["X".to_string()]).unwrap();
    let t = measure_bounded_values(&p, 0..=8, Budget::default(), MeasureConfig::default(), Some(&poly)).unwrap();
    for r in &t.rows {
        // append(x, y) with two nil ends is the largest reachable state
        assert_eq!(r.max_state_size, r.n + 3, "n = {}", r.n);
        assert_eq!(r.within_poly, Some(true));
    }
    assert_eq!(t.growth(), Growth::PolynomialConsistent);

    // doubling happens only every other letter, so the original stays polynomial
    let r = load("running.trs");
    let t = measure_bounded_values(&r, 2..=9, Budget::default(), MeasureConfig::default(), None).unwrap();
    assert_eq!(t.growth(), Growth::PolynomialConsistent);
    let b = load("running_blind.trs");
    let t = measure_bounded_values(&b, 2..=9, Budget::default(), MeasureConfig::default(), None).unwrap();
    assert_eq!(t.growth(), Growth::ExponentialConsistent);

    let k = parse_program("constructors: s/1 z/0\nfunctions: g/1\ng(x) -> z\nmain: g\n").unwrap();
    let t = measure_bounded_values(&k, 0..=6, Budget::default(), MeasureConfig::default(), None).unwrap();
    assert!(t.rows.iter().all(|r| r.max_state_size == r.n + 2 && r.states == 1));
}

#[test]
fn extended_certification() {
    let config = ExtendedConfig::default();
    let add = qitrs::bc::compile(&qitrs::bc::parse_bc(&read("add.bc")).unwrap()).unwrap();
    let v = certify_extended(&add.program, Some(&add.qi), None, &config).unwrap();
    assert_eq!(v.overall, ExtendedOverall::CertifiedP);

    let running = load("running.trs");
    let v = certify_extended(&running, None, None, &config).unwrap();
    assert_eq!(v.overall, ExtendedOverall::EmpiricallyConsistent, "{}", v.to_json());
    assert!(v.eppo);

    let blind = load("running_blind.trs");
    let v = certify_extended(&blind, None, None, &config).unwrap();
    assert!(matches!(v.overall, ExtendedOverall::Refuted(_)), "{}", v.to_json());

    let append = load("append.trs");
    let a = QiAssignment::from_program(&append).unwrap().unwrap();
    let v = certify_extended(&append, Some(&a), None, &config).unwrap();
    assert_eq!(v.overall, ExtendedOverall::CertifiedP);
}
