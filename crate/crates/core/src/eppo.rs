//! Word programs under EPPO: production sizes, normality and normalization,
//! label paths in call dags and their commutation, the same-class
//! descendant bound, bounded-values measurement and extended certification.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::RangeInclusive;

use serde::Serialize;
use serde_json::json;

use crate::blind::{classify_growth, measure_strong_poly, Growth, GrowthTable, MeasureConfig};
use crate::call_struct::{call_site_labels, label_table, CallSite, CallStructure, EdgeRef};
use crate::error::{Error, Result};
use crate::explore::{compositions, word_inputs, word_length, Explorer};
use crate::ordering::{check_program, program_precedence, Mode, Precedence};
use crate::qi::{self, QiAssignment, QiExpr, Status};
use crate::semantics::Budget;
use crate::term::{instantiate, patterns_overlap, Equation, Program, SymId, Term};

/// Default cap on the number of equations produced by normalization.
pub const NORMALIZATION_CAP: usize = 10_000;

fn require_words(program: &Program) -> Result<()> {
    if program.is_word_program() {
        Ok(())
    } else {
        Err(Error::NotWordProgram("a constructor has arity above 1".into()))
    }
}

/// Length of a word pattern: the number of unary constructors above its tail.
pub fn pattern_length(program: &Program, p: &Term) -> usize {
    word_length(&program.signature, p)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductionProfile {
    /// K_e per equation.
    pub per_equation: Vec<usize>,
    /// K_h per precedence class index.
    pub per_class: BTreeMap<usize, usize>,
}

impl ProductionProfile {
    pub fn of_function(&self, prec: &Precedence, f: SymId) -> usize {
        self.per_class.get(&prec.class_of(f)).copied().unwrap_or(0)
    }

    pub fn to_json(&self, program: &Program, prec: &Precedence) -> serde_json::Value {
        let sig = &program.signature;
        json!({
            "per_equation": self.per_equation,
            "per_class": self.per_class.iter().map(|(&c, &k)| json!({
                "class": prec.classes()[c].iter().map(|&s| sig.name(s)).collect::<Vec<_>>(),
                "K": k,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Production sizes: K_e is the longest argument pattern of a same-class call
/// in the rhs of e; K_h the maximum over the equations of a class.
pub fn production_profile(program: &Program, prec: &Precedence) -> Result<ProductionProfile> {
    require_words(program)?;
    let sig = &program.signature;
    let mut per_equation = Vec::new();
    let mut per_class: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &program.equations {
        let mut k = 0;
        for (_, sub) in e.rhs.function_subterms(sig) {
            let g = sub.head().expect("function-headed");
            if !prec.equiv(g, e.function) {
                continue;
            }
            for q in sub.args() {
                if !q.is_pattern(sig) {
                    return Err(Error::NotEppoOrdered(format!(
                        "same-class call {} has a non-pattern argument",
                        program.show(sub)
                    )));
                }
                k = k.max(pattern_length(program, q));
            }
        }
        per_equation.push(k);
        let c = per_class.entry(prec.class_of(e.function)).or_insert(0);
        *c = (*c).max(k);
    }
    Ok(ProductionProfile {
        per_equation,
        per_class,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalityWitness {
    pub equation: usize,
    pub argument: usize,
    pub length: usize,
    pub required: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalityReport {
    pub normal: bool,
    pub witnesses: Vec<NormalityWitness>,
}

/// Every non-ground pattern of an equation is at least as long as the
/// production size of its class. Ground patterns are exempt: a base case
/// such as f(nil) cannot be lengthened.
pub fn is_normal(program: &Program, prec: &Precedence) -> Result<NormalityReport> {
    let prof = production_profile(program, prec)?;
    let mut witnesses = Vec::new();
    for e in &program.equations {
        let k = prof.of_function(prec, e.function);
        for (i, p) in e.patterns.iter().enumerate() {
            let len = pattern_length(program, p);
            if !p.is_ground() && len < k {
                witnesses.push(NormalityWitness {
                    equation: e.index,
                    argument: i,
                    length: len,
                    required: k,
                });
            }
        }
    }
    Ok(NormalityReport {
        normal: witnesses.is_empty(),
        witnesses,
    })
}

#[derive(Clone, Debug)]
pub struct Normalization {
    pub program: Program,
    pub added: Vec<String>,
    pub removed: Vec<String>,
    /// Generated instances dropped because their rhs makes a call no equation matches.
    pub pruned: Vec<String>,
    pub rounds: usize,
}

impl Normalization {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "program": self.program.to_text(),
            "added": self.added,
            "removed": self.removed,
            "pruned": self.pruned,
            "rounds": self.rounds,
        })
    }
}

fn tail_var(p: &Term) -> Option<String> {
    match p {
        Term::Var(x) => Some(x.clone()),
        Term::App(_, args) => args.first().and_then(tail_var),
    }
}

/// A generated equation whose rhs calls g on patterns that no g-equation
/// overlaps can never complete; dropping it keeps the derivable results.
fn has_dead_call(program_eqs: &[Equation], e: &Equation, program: &Program) -> bool {
    let sig = &program.signature;
    e.rhs.function_subterms(sig).into_iter().any(|(_, sub)| {
        let g = sub.head().expect("function-headed");
        sub.args().iter().all(|a| a.is_pattern(sig))
            && !program_eqs.iter().any(|d| {
                d.function == g && d.patterns.iter().zip(sub.args()).all(|(p, q)| patterns_overlap(p, q))
            })
    })
}

/// Extends the shortest under-sized patterns until the program is normal.
pub fn normalize(program: &Program, prec: &Precedence) -> Result<Normalization> {
    normalize_with_cap(program, prec, NORMALIZATION_CAP)
}

pub fn normalize_with_cap(program: &Program, prec: &Precedence, cap: usize) -> Result<Normalization> {
    require_words(program)?;
    let verdict = check_program(program, prec, Mode::Eppo)?;
    if !verdict.overall {
        return Err(Error::NotEppoOrdered(
            "normalization needs an EPPO-ordered program".into(),
        ));
    }
    let sig = &program.signature;
    let unary: Vec<SymId> = sig.constructors().into_iter().filter(|&c| sig.arity(c) == 1).collect();
    let nullary: Vec<SymId> = sig.constructors().into_iter().filter(|&c| sig.arity(c) == 0).collect();
    let mut current = program.clone();
    let mut pruned = Vec::new();
    let mut rounds = 0;
    loop {
        let report = is_normal(&current, prec)?;
        let Some(w) = report.witnesses.first() else { break };
        rounds += 1;
        let e = &current.equations[w.equation];
        let x = tail_var(&e.patterns[w.argument]).expect("non-ground pattern has a tail variable");
        let mut instances = Vec::new();
        for c in unary.iter().map(|&c| Term::App(c, vec![Term::var(&x)])).chain(nullary.iter().map(|&c| Term::constant(c))) {
            let sigma = BTreeMap::from([(x.clone(), c)]);
            instances.push(Equation {
                function: e.function,
                patterns: e.patterns.iter().map(|p| instantiate(p, &sigma)).collect(),
                rhs: instantiate(&e.rhs, &sigma),
                index: 0,
            });
        }
        let mut pool: Vec<Equation> = current
            .equations
            .iter()
            .filter(|d| d.index != w.equation)
            .cloned()
            .collect();
        pool.extend(instances.iter().cloned());
        let mut eqs = Vec::new();
        for d in &current.equations {
            if d.index != w.equation {
                eqs.push(d.clone());
                continue;
            }
            for inst in &instances {
                if has_dead_call(&pool, inst, &current) {
                    pruned.push(current.show_equation(inst));
                } else {
                    eqs.push(inst.clone());
                }
            }
        }
        if eqs.len() > cap {
            return Err(Error::NormalizationCap(cap));
        }
        current = Program::new(sig.clone(), eqs, program.main)?.with_annotations(program.annotations.clone());
    }
    let before: BTreeSet<String> = program.equations.iter().map(|e| program.show_equation(e)).collect();
    let after: BTreeSet<String> = current.equations.iter().map(|e| current.show_equation(e)).collect();
    Ok(Normalization {
        added: current
            .equations
            .iter()
            .map(|e| current.show_equation(e))
            .filter(|s| !before.contains(s))
            .collect(),
        removed: program
            .equations
            .iter()
            .map(|e| program.show_equation(e))
            .filter(|s| !after.contains(s))
            .collect(),
        program: current,
        pruned,
        rounds,
    })
}

// ---------------------------------------------------------------- label paths

/// A call dag with same-class call sites labelled.
pub struct LabelledDag<'a> {
    pub dag: &'a CallStructure,
    pub sites: Vec<CallSite>,
    labels: HashMap<(usize, usize), usize>,
    /// Same-class outgoing (label, target) per node.
    out: Vec<Vec<(usize, usize)>>,
}

impl<'a> LabelledDag<'a> {
    pub fn new(program: &Program, dag: &'a CallStructure, prec: &Precedence) -> Self {
        let sites = call_site_labels(program, prec);
        let labels = label_table(&sites);
        let mut out = vec![Vec::new(); dag.len()];
        let same = |e: &EdgeRef| prec.equiv(dag.nodes[e.from].state.function, dag.nodes[e.to].state.function);
        for e in dag.edges.iter().chain(dag.read_links.iter()).filter(|e| same(e)) {
            if let Some(&l) = labels.get(&(e.equation, e.occurrence)) {
                out[e.from].push((l, e.to));
            }
        }
        for v in &mut out {
            v.sort();
        }
        LabelledDag {
            dag,
            sites,
            labels,
            out,
        }
    }

    pub fn label_of(&self, equation: usize, occurrence: usize) -> Option<usize> {
        self.labels.get(&(equation, occurrence)).copied()
    }

    pub fn step(&self, node: usize, label: usize) -> Option<usize> {
        self.out[node].iter().find(|(l, _)| *l == label).map(|&(_, t)| t)
    }

    pub fn follow(&self, node: usize, word: &[usize]) -> Option<usize> {
        word.iter().try_fold(node, |n, &l| self.step(n, l))
    }

    /// All same-class label paths from `node` of length at most `max_len`,
    /// with their end nodes; the empty path included.
    pub fn paths(&self, node: usize, max_len: usize) -> Vec<(Vec<usize>, usize)> {
        let mut out = vec![(Vec::new(), node)];
        let mut frontier = vec![(Vec::new(), node)];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for (w, n) in &frontier {
                for &(l, t) in &self.out[*n] {
                    let mut w2 = w.clone();
                    w2.push(l);
                    next.push((w2, t));
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    /// Label word of a same-class path from `ancestor` to `descendant`, if any.
    pub fn path_word(&self, ancestor: usize, descendant: usize) -> Option<Vec<usize>> {
        let mut prev: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut queue = std::collections::VecDeque::from([ancestor]);
        let mut seen = BTreeSet::from([ancestor]);
        while let Some(n) = queue.pop_front() {
            if n == descendant {
                let mut w = Vec::new();
                let mut m = n;
                while m != ancestor {
                    let (p, l) = prev[&m];
                    w.push(l);
                    m = p;
                }
                w.reverse();
                return Some(w);
            }
            for &(l, t) in &self.out[n] {
                if seen.insert(t) {
                    prev.insert(t, (n, l));
                    queue.push_back(t);
                }
            }
        }
        None
    }
}

fn commutative_image(w: &[usize]) -> Vec<usize> {
    let mut v = w.to_vec();
    v.sort_unstable();
    v
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CommutationReport {
    pub nodes: usize,
    pub pairs_checked: u64,
    pub violations: Vec<String>,
}

/// Paths from a node with the same commutative image, extended by a common
/// label, must end on the same state. Paths have length at most `max_len`
/// including the extending label.
pub fn check_commutation(program: &Program, ld: &LabelledDag, max_len: usize) -> CommutationReport {
    let mut report = CommutationReport::default();
    let nodes = &ld.dag.nodes;
    for n in 0..ld.dag.len() {
        report.nodes += 1;
        let mut groups: BTreeMap<Vec<usize>, Vec<(Vec<usize>, usize)>> = BTreeMap::new();
        for (w, end) in ld.paths(n, max_len.saturating_sub(1)) {
            groups.entry(commutative_image(&w)).or_default().push((w, end));
        }
        for group in groups.values() {
            for (i, (w1, e1)) in group.iter().enumerate() {
                for (w2, e2) in &group[i + 1..] {
                    for &(a, t1) in &ld.out[*e1] {
                        let Some(t2) = ld.step(*e2, a) else { continue };
                        report.pairs_checked += 1;
                        if nodes[t1].state != nodes[t2].state {
                            report.violations.push(format!(
                                "from {}: {:?}·{a} reaches {} but {:?}·{a} reaches {}",
                                nodes[n].state.show(program),
                                w1,
                                nodes[t1].state.show(program),
                                w2,
                                nodes[t2].state.show(program)
                            ));
                        }
                    }
                }
            }
        }
    }
    report
}

/// Along every same-class edge argument lengths weakly decrease and one
/// strictly decreases. Returns the violating edges.
pub fn check_strict_descent(program: &Program, dag: &CallStructure, prec: &Precedence) -> Vec<String> {
    let sig = &program.signature;
    let mut bad = Vec::new();
    for e in dag.edges.iter().chain(dag.read_links.iter()) {
        let (a, b) = (&dag.nodes[e.from].state, &dag.nodes[e.to].state);
        if !prec.equiv(a.function, b.function) {
            continue;
        }
        let la: Vec<usize> = a.args.iter().map(|v| word_length(sig, v)).collect();
        let lb: Vec<usize> = b.args.iter().map(|v| word_length(sig, v)).collect();
        let ok = la.len() == lb.len() && la.iter().zip(&lb).all(|(x, y)| y <= x) && la.iter().zip(&lb).any(|(x, y)| y < x);
        if !ok {
            bad.push(format!("{} -> {}", a.show(program), b.show(program)));
        }
    }
    bad
}

#[derive(Clone, Debug, Serialize)]
pub struct DescendantBound {
    pub node: usize,
    /// Distinct same-class descendants, the node itself excluded.
    pub count: usize,
    /// n · max word length of the arguments.
    pub i: usize,
    /// Same-class call sites, the alphabet of label words.
    pub labels: usize,
    pub bound: u128,
    pub holds: bool,
    /// The bound read with M as the number of functions in the class.
    pub class_size: usize,
    pub class_size_bound: u128,
    pub class_size_holds: bool,
    /// Most same-class nodes on a branch strictly below the node.
    pub longest_branch: usize,
    pub branch_holds: bool,
}

fn pow_sat(b: u128, e: usize) -> u128 {
    (0..e).fold(1u128, |acc, _| acc.saturating_mul(b))
}

pub fn same_class_descendant_bound(program: &Program, ld: &LabelledDag, prec: &Precedence, node: usize) -> DescendantBound {
    let sig = &program.signature;
    let dag = ld.dag;
    let state = &dag.nodes[node].state;
    let class = prec.class_of(state.function);
    let i = state.args.len() * state.args.iter().map(|v| word_length(sig, v)).max().unwrap_or(0);
    let labels = ld
        .sites
        .iter()
        .filter(|s| prec.class_of(program.equations[s.equation].function) == class)
        .count();
    let class_size = prec.classes()[class].len();
    let mut seen = BTreeSet::new();
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        for &(_, t) in &ld.out[n] {
            if seen.insert(t) {
                stack.push(t);
            }
        }
    }
    seen.remove(&node);
    let count = seen.len();
    // longest path in the same-class sub-dag
    fn longest(ld: &LabelledDag, n: usize, memo: &mut HashMap<usize, usize>) -> usize {
        if let Some(&v) = memo.get(&n) {
            return v;
        }
        let v = ld.out[n].iter().map(|&(_, t)| 1 + longest(ld, t, memo)).max().unwrap_or(0);
        memo.insert(n, v);
        v
    }
    let longest_branch = longest(ld, node, &mut HashMap::new());
    let bound = pow_sat(i as u128 + 1, labels);
    let class_size_bound = pow_sat(i as u128 + 1, class_size);
    DescendantBound {
        node,
        count,
        i,
        labels,
        bound,
        holds: count as u128 <= bound,
        class_size,
        class_size_bound,
        class_size_holds: count as u128 <= class_size_bound,
        longest_branch,
        branch_holds: longest_branch <= i,
    }
}

/// Number of vectors in ℕ^n summing to i, by enumeration.
pub fn compositions_count(n: usize, i: usize) -> usize {
    compositions(i, n).len()
}

// ---------------------------------------------------------------- bounded values

#[derive(Clone, Debug, Serialize)]
pub struct ValuesRow {
    pub n: usize,
    pub max_state_size: usize,
    pub states: usize,
    pub inputs: usize,
    pub truncated: bool,
    /// User polynomial at n, when given.
    pub poly: Option<String>,
    pub within_poly: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValuesTable {
    pub rows: Vec<ValuesRow>,
    pub note: Option<String>,
}

impl ValuesTable {
    pub fn growth(&self) -> Growth {
        let series: Vec<(usize, f64)> = self
            .rows
            .iter()
            .filter(|r| !r.truncated)
            .map(|r| (r.n, r.max_state_size as f64))
            .collect();
        classify_growth(&series)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,max_state_size,states,truncated\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.n, r.max_state_size, r.states, r.truncated));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("serializable");
        v["classification"] = json!({"max_state_size": self.growth().name(), "label": "empirical, not a proof"});
        v
    }
}

/// Largest state reachable in the call trees of `main` over inputs of each
/// total word length; `poly` is a one-variable bound in `n` to check against.
pub fn measure_bounded_values(
    program: &Program,
    sizes: RangeInclusive<usize>,
    budget: Budget,
    config: MeasureConfig,
    poly: Option<&QiExpr>,
) -> Result<ValuesTable> {
    let main = program.main;
    let mut rows = Vec::new();
    let mut note = None;
    for n in sizes {
        let (inputs, _) = word_inputs(program, main, n, config.input_cap, config.samples, config.seed)?;
        let mut ex = Explorer::new(program, budget);
        let mut row = ValuesRow {
            n,
            max_state_size: 0,
            states: 0,
            inputs: inputs.len(),
            truncated: false,
            poly: None,
            within_poly: None,
        };
        let mut all = BTreeSet::new();
        let mut stop = false;
        for args in &inputs {
            let root = Term::App(main, args.clone());
            match ex.outcomes(&root) {
                Ok(_) => all.extend(ex.reachable(&root)),
                Err(Error::BudgetExceeded(m)) => {
                    row.truncated = true;
                    note = Some(format!("stopped at n = {n}: {m}"));
                    stop = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        row.truncated |= ex.truncated;
        row.states = all.len();
        row.max_state_size = all.iter().map(|t| t.size()).max().unwrap_or(0);
        if let Some(p) = poly {
            let bound = p.eval(&[qi::rat(n as i64)]);
            row.within_poly = Some(qi::rat(row.max_state_size as i64) <= bound);
            row.poly = Some(qi::show_rat(&bound));
        }
        rows.push(row);
        if stop {
            break;
        }
    }
    Ok(ValuesTable { rows, note })
}

// ---------------------------------------------------------------- certification

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtendedOverall {
    CertifiedP,
    Refuted(String),
    EmpiricallyConsistent,
    Unknown(String),
}

impl ExtendedOverall {
    pub fn name(&self) -> &'static str {
        match self {
            ExtendedOverall::CertifiedP => "Certified-P",
            ExtendedOverall::Refuted(_) => "Refuted",
            ExtendedOverall::EmpiricallyConsistent => "Empirically-consistent",
            ExtendedOverall::Unknown(_) => "Unknown",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExtendedVerdict {
    pub eppo: bool,
    pub eppo_after_normalization: Option<bool>,
    pub normalized_equations: Option<usize>,
    pub qi: Option<Status>,
    pub orthogonal: bool,
    pub growth: Option<GrowthTable>,
    pub bounded_values: Option<ValuesTable>,
    pub overall: ExtendedOverall,
}

impl ExtendedVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "eppo": self.eppo,
            "eppo_after_normalization": self.eppo_after_normalization,
            "normalized_equations": self.normalized_equations,
            "qi": self.qi.as_ref().map(|s| s.name()),
            "memo_confluence_gate": self.orthogonal,
            "growth": self.growth.as_ref().map(|g| g.to_json()),
            "bounded_values": self.bounded_values.as_ref().map(|v| v.to_json()),
            "overall": self.overall.name(),
            "reason": match &self.overall {
                ExtendedOverall::Refuted(r) | ExtendedOverall::Unknown(r) => Some(r.clone()),
                _ => None,
            },
        })
    }
}

#[derive(Clone, Debug)]
pub struct ExtendedConfig {
    pub sizes: RangeInclusive<usize>,
    pub budget: Budget,
    pub measure: MeasureConfig,
    pub seed: u64,
}

impl Default for ExtendedConfig {
    fn default() -> Self {
        ExtendedConfig {
            sizes: 1..=8,
            budget: Budget::default(),
            measure: MeasureConfig::default(),
            seed: qi::DEFAULT_SEED,
        }
    }
}

/// EPPO (after normalization) with a valid QI and the memo confluence gate
/// certifies; otherwise measurement can refute or support.
pub fn certify_extended(
    program: &Program,
    assignment: Option<&QiAssignment>,
    user_poly: Option<&QiExpr>,
    config: &ExtendedConfig,
) -> Result<ExtendedVerdict> {
    let prec = program_precedence(program, Mode::Eppo)?;
    let eppo = check_program(program, &prec, Mode::Eppo).map(|v| v.overall).unwrap_or(false);
    let words = program.is_word_program();
    let (mut eppo_after, mut normalized_equations) = (None, None);
    if eppo && words {
        match normalize(program, &prec) {
            Ok(norm) => {
                eppo_after = Some(check_program(&norm.program, &prec, Mode::Eppo)?.overall);
                normalized_equations = Some(norm.program.equations.len());
            }
            Err(Error::NormalizationCap(_)) => eppo_after = None,
            Err(e) => return Err(e),
        }
    }
    let qi_status = assignment.map(|a| qi::check_qi(program, a, config.seed).overall);
    let orthogonal = program.is_orthogonal();
    let mut verdict = ExtendedVerdict {
        eppo,
        eppo_after_normalization: eppo_after,
        normalized_equations,
        qi: qi_status.clone(),
        orthogonal,
        growth: None,
        bounded_values: None,
        overall: ExtendedOverall::Unknown("no criterion applies".into()),
    };
    if eppo && eppo_after != Some(false) && qi_status == Some(Status::Valid) && orthogonal {
        verdict.overall = ExtendedOverall::CertifiedP;
        return Ok(verdict);
    }
    if !words {
        verdict.overall = ExtendedOverall::Unknown("measurement needs a word program".into());
        return Ok(verdict);
    }
    if !orthogonal {
        let table = measure_strong_poly(program, program.main, config.sizes.clone(), config.budget, config.measure)?;
        let g = classify_growth(&table.series(|r| r.worst_rules as f64));
        if g == Growth::ExponentialConsistent {
            let last = table.rows.iter().rev().find(|r| !r.truncated).cloned();
            verdict.overall = ExtendedOverall::Refuted(match last {
                Some(r) => format!("cbv worst rule count grows exponentially ({} rules at n = {})", r.worst_rules, r.n),
                None => "cbv worst rule count grows exponentially".into(),
            });
            verdict.growth = Some(table);
            return Ok(verdict);
        }
        verdict.growth = Some(table);
    }
    if eppo {
        let values = measure_bounded_values(program, config.sizes.clone(), config.budget, config.measure, user_poly)?;
        if let Some(r) = values.rows.iter().find(|r| r.within_poly == Some(false)) {
            verdict.overall = ExtendedOverall::Refuted(format!(
                "state of size {} at n = {} exceeds the bound {}",
                r.max_state_size,
                r.n,
                r.poly.clone().unwrap_or_default()
            ));
        } else if values.growth() == Growth::ExponentialConsistent {
            verdict.overall = ExtendedOverall::Refuted("largest state size grows exponentially".into());
        } else if orthogonal {
            verdict.overall = ExtendedOverall::EmpiricallyConsistent;
        } else {
            verdict.overall = ExtendedOverall::Unknown("non-confluent: memoisation does not apply".into());
        }
        verdict.bounded_values = Some(values);
        return Ok(verdict);
    }
    verdict.overall = ExtendedOverall::Unknown("not ordered by EPPO".into());
    Ok(verdict)
}
