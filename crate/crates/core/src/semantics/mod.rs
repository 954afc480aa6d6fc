//! Call-by-value and memoised call-by-value derivations.

mod cbv;
mod memo;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::term::{apply_subst, match_patterns, Program, SymId, Term, Value};

pub use cbv::{eval_cbv, eval_first, Evaluation};
pub use memo::eval_memo;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    Constructor,
    Split,
    Function,
    Read,
    Update,
}

impl Rule {
    pub fn is_active(self) -> bool {
        matches!(self, Rule::Function | Rule::Update)
    }

    pub fn is_passive(self) -> bool {
        matches!(self, Rule::Constructor | Rule::Split)
    }

    pub fn is_semi_active(self) -> bool {
        self == Rule::Read
    }
}

/// Aggregates over a judgement's subtree, computed at construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub rules: u64,
    pub active: u64,
    pub passive: u64,
    pub semi_active: u64,
    pub max_active_size: usize,
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgement {
    pub lhs: Term,
    pub result: Value,
    pub rule: Rule,
    pub children: Vec<Arc<Judgement>>,
    /// Index of the activated equation (Function and Update only).
    pub equation: Option<usize>,
    pub counts: Counts,
}

impl Judgement {
    pub fn new(lhs: Term, result: Value, rule: Rule, children: Vec<Arc<Judgement>>, equation: Option<usize>) -> Self {
        let mut c = Counts {
            rules: 1,
            ..Counts::default()
        };
        match rule {
            r if r.is_active() => {
                c.active = 1;
                c.max_active_size = lhs.size();
            }
            r if r.is_passive() => c.passive = 1,
            _ => c.semi_active = 1,
        }
        for ch in &children {
            c.rules += ch.counts.rules;
            c.active += ch.counts.active;
            c.passive += ch.counts.passive;
            c.semi_active += ch.counts.semi_active;
            c.max_active_size = c.max_active_size.max(ch.counts.max_active_size);
            c.height = c.height.max(ch.counts.height);
        }
        c.height += 1;
        Judgement {
            lhs,
            result,
            rule,
            children,
            equation,
            counts: c,
        }
    }

    /// Constructor-only derivation of a value.
    pub fn of_value(v: &Value) -> Arc<Judgement> {
        let children = v.args().iter().map(Judgement::of_value).collect();
        Arc::new(Judgement::new(v.clone(), v.clone(), Rule::Constructor, children, None))
    }

    pub fn at(&self, path: &[usize]) -> Option<&Judgement> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children.get(i)?.at(rest),
        }
    }

    /// Visits every judgement occurrence in pre-order with its path.
    pub fn walk(&self, f: &mut dyn FnMut(&[usize], &Judgement)) {
        fn go(j: &Judgement, path: &mut Vec<usize>, f: &mut dyn FnMut(&[usize], &Judgement)) {
            f(path, j);
            for (i, c) in j.children.iter().enumerate() {
                path.push(i);
                go(c, path, f);
                path.pop();
            }
        }
        go(self, &mut Vec::new(), f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CacheEventKind {
    Update,
    Read,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheEvent {
    pub kind: CacheEventKind,
    pub function: SymId,
    pub args: Vec<Value>,
    pub result: Value,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DerivationStats {
    pub rule_count: u64,
    /// Distinct active judgements (t, v).
    pub active_count: u64,
    /// Active judgement occurrences; equals the call tree node count.
    pub active_occurrences: u64,
    pub passive_count: u64,
    pub semi_active_count: u64,
    pub max_active_size: usize,
    pub depth: usize,
    pub per_rank_active_counts: BTreeMap<usize, u64>,
    /// rule_count plus, for memo proofs, cache size times key size per lookup.
    pub charged_cost: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationProof {
    pub root: Arc<Judgement>,
    pub memo: bool,
    pub cache_trace: Vec<CacheEvent>,
    pub stats: DerivationStats,
}

impl DerivationProof {
    pub fn new(program: &Program, root: Arc<Judgement>, memo: bool, cache_trace: Vec<CacheEvent>) -> Self {
        let mut p = DerivationProof {
            root,
            memo,
            cache_trace,
            stats: DerivationStats::default(),
        };
        p.stats = classify(program, &p);
        p
    }

    pub fn result(&self) -> &Value {
        &self.root.result
    }

    /// Cache contents after evaluation, i.e. the Update entries.
    pub fn final_cache(&self) -> Vec<(SymId, Vec<Value>, Value)> {
        self.cache_trace
            .iter()
            .filter(|e| e.kind == CacheEventKind::Update)
            .map(|e| (e.function, e.args.clone(), e.result.clone()))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChoicePolicy {
    FirstMatch,
    Seeded(u64),
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub max_rules: u64,
    pub max_depth: usize,
    pub max_derivations: usize,
    /// Distinct states explored by worst-case and reachability searches.
    pub max_states: usize,
    /// Distinct (value, argument tuple) combinations per explored term.
    pub max_outcomes: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_rules: 5_000_000,
            max_depth: 2_000,
            max_derivations: 10_000,
            max_states: 200_000,
            max_outcomes: 20_000,
        }
    }
}

pub fn classify(program: &Program, proof: &DerivationProof) -> DerivationStats {
    let c = proof.root.counts;
    let ranks = crate::ordering::function_ranks(program);
    let mut per_rank = BTreeMap::new();
    let mut distinct = std::collections::HashSet::new();
    proof.root.walk(&mut |_, j| {
        if j.rule.is_active() {
            distinct.insert((j.lhs.clone(), j.result.clone()));
            if let Some(f) = j.lhs.head() {
                *per_rank.entry(ranks[f.0 as usize]).or_insert(0) += 1;
            }
        }
    });
    let mut charged = c.rules;
    let mut cache_size = 0u64;
    for e in &proof.cache_trace {
        let key = 1 + e.args.iter().map(|a| a.size() as u64).sum::<u64>();
        charged += cache_size * key;
        if e.kind == CacheEventKind::Update {
            cache_size += 1;
        }
    }
    DerivationStats {
        rule_count: c.rules,
        active_count: distinct.len() as u64,
        active_occurrences: c.active,
        passive_count: c.passive,
        semi_active_count: c.semi_active,
        max_active_size: c.max_active_size,
        depth: c.height,
        per_rank_active_counts: per_rank,
        charged_cost: charged,
    }
}

/// Largest passive-only subderivation rooted at the judgement at `path`.
pub fn max_dependence(proof: &DerivationProof, path: &[usize]) -> Result<Judgement> {
    let j = proof
        .root
        .at(path)
        .ok_or_else(|| Error::Usage(format!("no judgement at path {path:?}")))?;
    if !j.rule.is_passive() {
        return Err(Error::NotPassive);
    }
    fn prune(j: &Judgement) -> Judgement {
        let children = j
            .children
            .iter()
            .filter(|c| c.rule.is_passive())
            .map(|c| Arc::new(prune(c)))
            .collect();
        Judgement::new(j.lhs.clone(), j.result.clone(), j.rule, children, None)
    }
    Ok(prune(j))
}

/// Largest rhs size; activations satisfy |rσ| ≤ c · |f(v)|.
pub fn activation_growth(program: &Program) -> usize {
    program.equations.iter().map(|e| e.rhs.size()).max().unwrap_or(0)
}

/// Checks every judgement against its inference rule, and for memo proofs the
/// cache discipline: each Read hits an earlier Update, each key is updated once.
pub fn validate(program: &Program, proof: &DerivationProof) -> std::result::Result<(), String> {
    let sig = &program.signature;
    let mut err = None;
    proof.root.walk(&mut |path, j| {
        if err.is_some() {
            return;
        }
        if let Err(e) = check_local(program, j, proof.memo) {
            err = Some(format!("at {path:?} ({}): {e}", sig.show(&j.lhs)));
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    if proof.memo {
        let mut order = Vec::new();
        post_order(&proof.root, &mut order);
        let mut updated = HashSet::new();
        let mut trace = Vec::new();
        for j in order {
            match j.rule {
                Rule::Update => {
                    if !updated.insert(j.lhs.clone()) {
                        return Err(format!("key {} updated twice", sig.show(&j.lhs)));
                    }
                    trace.push((CacheEventKind::Update, j.lhs.clone(), j.result.clone()));
                }
                Rule::Read => {
                    if !updated.contains(&j.lhs) {
                        return Err(format!("read of {} before its update", sig.show(&j.lhs)));
                    }
                    trace.push((CacheEventKind::Read, j.lhs.clone(), j.result.clone()));
                }
                _ => {}
            }
        }
        let recorded: Vec<_> = proof
            .cache_trace
            .iter()
            .map(|e| (e.kind, Term::App(e.function, e.args.clone()), e.result.clone()))
            .collect();
        if recorded != trace {
            return Err("cache trace does not follow the derivation".into());
        }
        let mut values = BTreeMap::new();
        for (kind, key, v) in &trace {
            if *kind == CacheEventKind::Update {
                values.insert(key.clone(), v.clone());
            } else if values.get(key) != Some(v) {
                return Err(format!("read of {} returns a value not in the cache", sig.show(key)));
            }
        }
    }
    Ok(())
}

fn post_order<'a>(j: &'a Judgement, out: &mut Vec<&'a Judgement>) {
    for c in &j.children {
        post_order(c, out);
    }
    out.push(j);
}

fn check_local(program: &Program, j: &Judgement, memo: bool) -> std::result::Result<(), String> {
    let sig = &program.signature;
    let Term::App(f, args) = &j.lhs else {
        return Err("lhs is a variable".into());
    };
    if !j.result.is_value(sig) {
        return Err("result is not a value".into());
    }
    match j.rule {
        Rule::Constructor => {
            if !sig.is_constructor(*f) || j.children.len() != args.len() {
                return Err("malformed Constructor rule".into());
            }
            for (c, a) in j.children.iter().zip(args) {
                if &c.lhs != a {
                    return Err("Constructor premise lhs differs from argument".into());
                }
            }
            let rebuilt = Term::App(*f, j.children.iter().map(|c| c.result.clone()).collect());
            if rebuilt != j.result {
                return Err("Constructor result mismatch".into());
            }
        }
        Rule::Split => {
            if !sig.is_function(*f) || args.iter().all(|a| a.is_value(sig)) {
                return Err("Split needs a function call with a non-value argument".into());
            }
            if j.children.len() != args.len() + 1 {
                return Err("Split premise count".into());
            }
            for (c, a) in j.children.iter().zip(args) {
                if &c.lhs != a {
                    return Err("Split premise lhs differs from argument".into());
                }
            }
            let last = j.children.last().unwrap();
            let call = Term::App(*f, j.children[..args.len()].iter().map(|c| c.result.clone()).collect());
            if last.lhs != call || last.result != j.result {
                return Err("Split final premise mismatch".into());
            }
            if !(last.rule.is_active() || last.rule.is_semi_active()) {
                return Err("Split final premise must be a call on values".into());
            }
        }
        Rule::Function | Rule::Update => {
            if (j.rule == Rule::Function) == memo {
                return Err("rule not allowed in this semantics".into());
            }
            if !j.lhs.is_call_on_values(sig) {
                return Err("active rule on a non-call".into());
            }
            let e = j
                .equation
                .and_then(|i| program.equations.get(i))
                .ok_or("missing activated equation")?;
            if e.function != *f {
                return Err("activated equation defines another function".into());
            }
            let sigma = match_patterns(&e.patterns, args).ok_or("activated equation does not match")?;
            let activation = apply_subst(&e.rhs, &sigma).map_err(|e| e.to_string())?;
            if j.children.len() != 1 || j.children[0].lhs != activation || j.children[0].result != j.result {
                return Err("activation premise mismatch".into());
            }
        }
        Rule::Read => {
            if !memo || !j.children.is_empty() || !j.lhs.is_call_on_values(sig) {
                return Err("malformed Read".into());
            }
        }
    }
    Ok(())
}

/// JSON tree: rule tag, lhs, result, equation index, children.
pub fn judgement_json(program: &Program, j: &Judgement) -> serde_json::Value {
    json!({
        "rule": j.rule,
        "lhs": program.show(&j.lhs),
        "result": program.show(&j.result),
        "equation": j.equation,
        "children": j.children.iter().map(|c| judgement_json(program, c)).collect::<Vec<_>>(),
    })
}

pub fn proof_json(program: &Program, proof: &DerivationProof) -> serde_json::Value {
    let trace: Vec<_> = proof
        .cache_trace
        .iter()
        .map(|e| {
            json!({
                "kind": e.kind,
                "call": program.show(&Term::App(e.function, e.args.clone())),
                "result": program.show(&e.result),
            })
        })
        .collect();
    json!({
        "result": program.show(proof.result()),
        "memo": proof.memo,
        "stats": proof.stats,
        "cache_trace": trace,
        "proof": judgement_json(program, &proof.root),
    })
}
