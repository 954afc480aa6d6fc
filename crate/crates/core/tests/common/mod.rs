//! Shared helpers and independent oracles. The oracles only use the public
//! term and program data types; matching, evaluation and enumeration are
//! reimplemented here so they can be compared against the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use qitrs::semantics::{CacheEventKind, DerivationProof, Judgement, Rule};
use qitrs::qi::{QiAssignment, Rat};
use qitrs::{parse_program, parse_term, Program, Signature, SymId, Term};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_path(name: &str) -> PathBuf {
    corpus_dir().join(name)
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load(name: &str) -> Program {
    parse_program(&read(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every `.trs` program in the corpus, sorted by name.
pub fn corpus() -> Vec<(String, Program)> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".trs"))
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), load(&n))).collect()
}

pub fn term(p: &Program, text: &str) -> Term {
    parse_term(&p.signature, text).unwrap_or_else(|e| panic!("{text}: {e}"))
}

pub fn sym(p: &Program, name: &str) -> SymId {
    p.signature.lookup(name).unwrap_or_else(|| panic!("no symbol {name}"))
}

// ---------------------------------------------------------------- values

/// Number of unary constructors in a word.
pub fn unary_count(sig: &Signature, v: &Term) -> usize {
    match v {
        Term::Var(_) => 0,
        Term::App(f, args) => {
            let own = usize::from(sig.is_constructor(*f) && args.len() == 1);
            own + args.iter().map(|a| unary_count(sig, a)).sum::<usize>()
        }
    }
}

/// Symbols plus variables.
pub fn size(t: &Term) -> usize {
    match t {
        Term::Var(_) => 1,
        Term::App(_, args) => 1 + args.iter().map(size).sum::<usize>(),
    }
}

/// Longest root-to-leaf path, counting nodes.
pub fn depth(t: &Term) -> usize {
    match t {
        Term::Var(_) => 1,
        Term::App(_, args) => 1 + args.iter().map(depth).max().unwrap_or(0),
    }
}

pub fn subterms(t: &Term, out: &mut Vec<Term>) {
    out.push(t.clone());
    for a in t.args() {
        subterms(a, out);
    }
}

/// All constructor values of exactly the given size.
pub fn values_of_size(sig: &Signature, n: usize) -> Vec<Term> {
    let mut memo: HashMap<usize, Vec<Term>> = HashMap::new();
    values_memo(sig, n, &mut memo)
}

fn values_memo(sig: &Signature, n: usize, memo: &mut HashMap<usize, Vec<Term>>) -> Vec<Term> {
    if let Some(v) = memo.get(&n) {
        return v.clone();
    }
    let mut out = Vec::new();
    if n > 0 {
        for c in sig.constructors() {
            let k = sig.arity(c);
            for split in splits(n - 1, k) {
                let parts: Vec<Vec<Term>> = split.iter().map(|&m| values_memo(sig, m, memo)).collect();
                for combo in product(&parts) {
                    out.push(Term::App(c, combo));
                }
            }
        }
    }
    memo.insert(n, out.clone());
    out
}

/// Ordered ways to write `total` as `k` positive parts.
fn splits(total: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=total {
        for mut rest in splits(total - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn values_up_to(sig: &Signature, n: usize) -> Vec<Term> {
    (1..=n).flat_map(|k| values_of_size(sig, k)).collect()
}

/// Cartesian product of candidate lists.
pub fn product<T: Clone>(sets: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for s in sets {
        let mut next = Vec::new();
        for prefix in &out {
            for x in s {
                let mut v = prefix.clone();
                v.push(x.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Argument tuples for `f` drawn from all values up to `max_size`.
pub fn inputs_up_to(p: &Program, f: SymId, max_size: usize) -> Vec<Vec<Term>> {
    let vals = values_up_to(&p.signature, max_size);
    let k = p.signature.arity(f);
    product(&vec![vals; k])
        .into_iter()
        .filter(|args| args.iter().map(size).sum::<usize>() <= max_size.max(k))
        .collect()
}

// ---------------------------------------------------------------- oracle evaluator

fn bind(pattern: &Term, value: &Term, sigma: &mut BTreeMap<String, Term>) -> bool {
    match pattern {
        Term::Var(x) => match sigma.get(x) {
            Some(bound) => bound == value,
            None => {
                sigma.insert(x.clone(), value.clone());
                true
            }
        },
        Term::App(c, ps) => match value {
            Term::App(d, vs) if c == d && ps.len() == vs.len() => ps.iter().zip(vs).all(|(p, v)| bind(p, v, sigma)),
            _ => false,
        },
    }
}

fn substitute(t: &Term, sigma: &BTreeMap<String, Term>) -> Term {
    match t {
        Term::Var(x) => sigma[x].clone(),
        Term::App(f, args) => Term::App(*f, args.iter().map(|a| substitute(a, sigma)).collect()),
    }
}

/// Set of every value derivable by innermost evaluation, trying all matching
/// equations. Calls are tabled, so it terminates on terminating programs.
pub struct Oracle<'p> {
    p: &'p Program,
    table: HashMap<Term, BTreeSet<Term>>,
}

impl<'p> Oracle<'p> {
    pub fn new(p: &'p Program) -> Self {
        Oracle { p, table: HashMap::new() }
    }

    pub fn results(&mut self, t: &Term) -> BTreeSet<Term> {
        let Term::App(f, args) = t else { panic!("open term") };
        let sets: Vec<Vec<Term>> = args.iter().map(|a| self.results(a).into_iter().collect()).collect();
        let mut out = BTreeSet::new();
        for combo in product(&sets) {
            if self.p.signature.is_constructor(*f) {
                out.insert(Term::App(*f, combo));
            } else {
                out.extend(self.call(*f, combo));
            }
        }
        out
    }

    fn call(&mut self, f: SymId, vals: Vec<Term>) -> BTreeSet<Term> {
        let key = Term::App(f, vals.clone());
        if let Some(r) = self.table.get(&key) {
            return r.clone();
        }
        let mut out = BTreeSet::new();
        for eq in self.p.equations.iter().filter(|e| e.function == f) {
            let mut sigma = BTreeMap::new();
            if eq.patterns.iter().zip(&vals).all(|(p, v)| bind(p, v, &mut sigma)) {
                let rhs = substitute(&eq.rhs, &sigma);
                out.extend(self.results(&rhs));
            }
        }
        self.table.insert(key, out.clone());
        out
    }

    /// Calls made so far, with their result sets.
    pub fn table(&self) -> &HashMap<Term, BTreeSet<Term>> {
        &self.table
    }
}

/// Number of distinct call states reached by a first-match (deterministic)
/// evaluation with sharing, computed by the oracle's own traversal.
pub fn distinct_first_match_states(p: &Program, t: &Term) -> usize {
    fn go(p: &Program, t: &Term, seen: &mut HashMap<Term, Term>) -> Term {
        let Term::App(f, args) = t else { panic!("open term") };
        let vals: Vec<Term> = args.iter().map(|a| go(p, a, seen)).collect();
        if p.signature.is_constructor(*f) {
            return Term::App(*f, vals);
        }
        let key = Term::App(*f, vals.clone());
        if let Some(v) = seen.get(&key) {
            return v.clone();
        }
        for eq in p.equations.iter().filter(|e| e.function == *f) {
            let mut sigma = BTreeMap::new();
            if eq.patterns.iter().zip(&vals).all(|(q, v)| bind(q, v, &mut sigma)) {
                let r = go(p, &substitute(&eq.rhs, &sigma), seen);
                seen.insert(key, r.clone());
                return r;
            }
        }
        panic!("stuck call")
    }
    let mut seen = HashMap::new();
    go(p, t, &mut seen);
    seen.len()
}

// ---------------------------------------------------------------- proof invariants

fn height(j: &Judgement) -> usize {
    1 + j.children.iter().map(|c| height(c)).max().unwrap_or(0)
}

fn node_count(j: &Judgement) -> usize {
    1 + j.children.iter().map(|c| node_count(c)).sum::<usize>()
}

/// Dependence bounds and cache linkage for one proof; returns violations.
pub fn proof_invariant_violations(p: &Program, proof: &DerivationProof) -> Vec<String> {
    let mut bad = Vec::new();
    let mut passive_paths = Vec::new();
    proof.root.walk(&mut |path, j| {
        if j.rule.is_passive() {
            passive_paths.push(path.to_vec());
        }
    });
    for path in passive_paths {
        let j = proof.root.at(&path).unwrap();
        let d = match qitrs::semantics::max_dependence(proof, &path) {
            Ok(d) => d,
            Err(e) => {
                bad.push(format!("{path:?}: {e}"));
                continue;
            }
        };
        let mut subs = Vec::new();
        subterms(&j.lhs, &mut subs);
        let mut outside = false;
        d.walk(&mut |_, k| {
            if !k.rule.is_passive() || !subs.contains(&k.lhs) {
                outside = true;
            }
        });
        if outside {
            bad.push(format!("{path:?}: dependence leaves subterms of {}", p.show(&j.lhs)));
        }
        if height(&d) > depth(&j.lhs) {
            bad.push(format!("{path:?}: dependence depth {} > {}", height(&d), depth(&j.lhs)));
        }
        if node_count(&d) > size(&j.lhs) {
            bad.push(format!("{path:?}: dependence nodes {} > {}", node_count(&d), size(&j.lhs)));
        }
    }
    if proof.memo {
        let mut updated: BTreeSet<(SymId, Vec<Term>, Term)> = BTreeSet::new();
        for e in &proof.cache_trace {
            let key = (e.function, e.args.clone(), e.result.clone());
            match e.kind {
                CacheEventKind::Update => {
                    updated.insert(key);
                }
                CacheEventKind::Read => {
                    if !updated.contains(&key) {
                        bad.push(format!("read of {} before its update", p.show(&Term::App(e.function, e.args.clone()))));
                    }
                }
            }
        }
        let mut reads = 0;
        let mut updates = 0;
        proof.root.walk(&mut |_, j| match j.rule {
            Rule::Read => reads += 1,
            Rule::Update => updates += 1,
            _ => {}
        });
        let trace_reads = proof.cache_trace.iter().filter(|e| e.kind == CacheEventKind::Read).count();
        if reads != trace_reads || updates != updated.len() {
            bad.push(format!(
                "cache trace disagrees with proof: {reads}/{trace_reads} reads, {updates}/{} updates",
                updated.len()
            ));
        }
    }
    bad
}

/// Update judgements in a memo proof.
pub fn update_count(proof: &DerivationProof) -> usize {
    let mut n = 0;
    proof.root.walk(&mut |_, j| {
        if j.rule == Rule::Update {
            n += 1;
        }
    });
    n
}

/// A judgement tree as nested (lhs, result, rule, children) text, for golden
/// comparisons.
pub fn shape(p: &Program, j: &Judgement) -> String {
    let kids: Vec<String> = j.children.iter().map(|c| shape(p, c)).collect();
    format!("{}↓{}[{:?}]({})", p.show(&j.lhs), p.show(&j.result), j.rule, kids.join(", "))
}

/// Interpretation of a term under an assignment, variables read from `env`.
pub fn interpret(a: &QiAssignment, t: &Term, env: &BTreeMap<String, Rat>) -> Rat {
    match t {
        Term::Var(x) => env[x].clone(),
        Term::App(f, args) => {
            let vals: Vec<Rat> = args.iter().map(|s| interpret(a, s, env)).collect();
            a.get(*f).expect("entry").eval(&vals)
        }
    }
}

/// Reference semantics of BC terms on bit lists, least significant first.
pub fn bc_eval(t: &qitrs::bc::BcTerm, normal: &[Vec<u8>], safe: &[Vec<u8>]) -> Vec<u8> {
    use qitrs::bc::BcTerm::*;
    match t {
        Zero => vec![],
        Succ(i) => {
            let mut v = vec![*i];
            v.extend(&safe[0]);
            v
        }
        Proj { n, j, .. } => {
            if *j <= *n {
                normal[j - 1].clone()
            } else {
                safe[j - n - 1].clone()
            }
        }
        Pred => safe[0].iter().skip(1).cloned().collect(),
        Cond => match safe[0].first() {
            Some(1) => safe[2].clone(),
            _ => safe[1].clone(),
        },
        SafeRec { g, h0, h1 } => {
            let (rec, xs) = normal.split_first().expect("recursion argument");
            let mut acc = bc_eval(g, xs, safe);
            for k in (0..rec.len()).rev() {
                let mut nrm = vec![rec[k + 1..].to_vec()];
                nrm.extend(xs.iter().cloned());
                let mut sf = safe.to_vec();
                sf.push(acc);
                acc = bc_eval(if rec[k] == 0 { h0 } else { h1 }, &nrm, &sf);
            }
            acc
        }
        SafeComp { g, hs, ls, .. } => {
            let hv: Vec<Vec<u8>> = hs.iter().map(|h| bc_eval(h, normal, &[])).collect();
            let lv: Vec<Vec<u8>> = ls.iter().map(|l| bc_eval(l, normal, safe)).collect();
            bc_eval(g, &hv, &lv)
        }
    }
}

pub fn bits_to_term(p: &Program, bits: &[u8]) -> Term {
    let mut t = Term::App(sym(p, "0"), vec![]);
    for b in bits.iter().rev() {
        t = Term::App(sym(p, if *b == 0 { "s0" } else { "s1" }), vec![t]);
    }
    t
}

pub fn all_bits(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w: &Vec<u8>| [0u8, 1].map(|b| [w.clone(), vec![b]].concat()))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}
