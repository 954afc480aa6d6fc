//! Exhaustive exploration of cbv derivations through dynamic programming
//! over states: for each call f(v) the map from derivable results to the
//! worst rule count and the number of derivations producing them.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::semantics::Budget;
use crate::term::{apply_subst, matching_equations, Program, Signature, SymId, Term, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub worst_rules: u64,
    pub derivations: u128,
}

pub type Outcomes = BTreeMap<Value, Outcome>;

fn merge(into: &mut Outcomes, v: Value, o: Outcome) {
    let e = into.entry(v).or_default();
    e.worst_rules = e.worst_rules.max(o.worst_rules);
    e.derivations = e.derivations.saturating_add(o.derivations);
}

pub struct Explorer<'p> {
    program: &'p Program,
    budget: Budget,
    states: HashMap<Term, Arc<Outcomes>>,
    edges: HashMap<Term, BTreeSet<Term>>,
    owners: Vec<Term>,
    on_stack: HashSet<Term>,
    pub truncated: bool,
}

impl<'p> Explorer<'p> {
    pub fn new(program: &'p Program, budget: Budget) -> Self {
        Explorer {
            program,
            budget,
            states: HashMap::new(),
            edges: HashMap::new(),
            owners: Vec::new(),
            on_stack: HashSet::new(),
            truncated: false,
        }
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// All results derivable from a ground term.
    pub fn outcomes(&mut self, t: &Term) -> Result<Outcomes> {
        let sig = &self.program.signature;
        if t.is_value(sig) {
            let mut m = Outcomes::new();
            m.insert(
                t.clone(),
                Outcome {
                    worst_rules: t.size() as u64,
                    derivations: 1,
                },
            );
            return Ok(m);
        }
        if t.is_call_on_values(sig) {
            if let Some(owner) = self.owners.last() {
                self.edges.entry(owner.clone()).or_default().insert(t.clone());
            }
            return Ok((*self.state(t)?).clone());
        }
        let Term::App(f, args) = t else {
            return Err(Error::Usage("cannot explore an open term".into()));
        };
        let combos = self.product(args)?;
        let mut out = Outcomes::new();
        let is_ctor = sig.is_constructor(*f);
        for (vals, o) in combos {
            let base = Outcome {
                worst_rules: o.worst_rules + 1,
                derivations: o.derivations,
            };
            let built = Term::App(*f, vals);
            if is_ctor {
                merge(&mut out, built, base);
            } else {
                for (w, so) in self.outcomes(&built)? {
                    merge(
                        &mut out,
                        w,
                        Outcome {
                            worst_rules: base.worst_rules + so.worst_rules,
                            derivations: base.derivations.saturating_mul(so.derivations),
                        },
                    );
                }
            }
        }
        Ok(out)
    }

    /// Argument tuples with summed worst cost and multiplied counts.
    fn product(&mut self, args: &[Term]) -> Result<Vec<(Vec<Value>, Outcome)>> {
        let mut acc: Vec<(Vec<Value>, Outcome)> = vec![(
            Vec::new(),
            Outcome {
                worst_rules: 0,
                derivations: 1,
            },
        )];
        for a in args {
            let outs = self.outcomes(a)?;
            let mut next = Vec::with_capacity(acc.len() * outs.len());
            'outer: for (vals, o) in &acc {
                for (v, vo) in &outs {
                    if next.len() >= self.budget.max_outcomes {
                        self.truncated = true;
                        break 'outer;
                    }
                    let mut vs = vals.clone();
                    vs.push(v.clone());
                    next.push((
                        vs,
                        Outcome {
                            worst_rules: o.worst_rules + vo.worst_rules,
                            derivations: o.derivations.saturating_mul(vo.derivations),
                        },
                    ));
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    /// Results of a call on values; each result's cost includes the Function rule.
    pub fn state(&mut self, call: &Term) -> Result<Arc<Outcomes>> {
        if let Some(o) = self.states.get(call) {
            return Ok(o.clone());
        }
        if self.on_stack.contains(call) {
            return Err(Error::CycleDetected(self.program.show(call)));
        }
        if self.states.len() >= self.budget.max_states {
            return Err(Error::BudgetExceeded(format!(
                "more than {} states explored",
                self.budget.max_states
            )));
        }
        if self.owners.len() >= self.budget.max_depth {
            return Err(Error::BudgetExceeded(format!("call depth above {}", self.budget.max_depth)));
        }
        self.on_stack.insert(call.clone());
        self.owners.push(call.clone());
        let result = (|| {
            let mut out = Outcomes::new();
            for (e, sigma) in matching_equations(self.program, call)? {
                let activation = apply_subst(&e.rhs, &sigma)?;
                for (w, o) in self.outcomes(&activation)? {
                    merge(
                        &mut out,
                        w,
                        Outcome {
                            worst_rules: o.worst_rules + 1,
                            derivations: o.derivations,
                        },
                    );
                }
            }
            Ok(out)
        })();
        self.owners.pop();
        self.on_stack.remove(call);
        let out = Arc::new(result?);
        self.states.insert(call.clone(), out.clone());
        Ok(out)
    }

    /// Calls made directly by the activations of `call` (explored states only).
    pub fn callees(&self, call: &Term) -> Vec<Term> {
        self.edges.get(call).map(|s| s.iter().cloned().collect()).unwrap_or_default()
    }

    /// States reachable from `root` through calls, restricted to states that
    /// have at least one complete derivation.
    pub fn reachable(&self, root: &Term) -> Vec<Term> {
        let live = |t: &Term| self.states.get(t).is_some_and(|o| !o.is_empty());
        let mut seen = BTreeSet::new();
        let mut stack = vec![root.clone()];
        while let Some(t) = stack.pop() {
            if !live(&t) || !seen.insert(t.clone()) {
                continue;
            }
            stack.extend(self.callees(&t));
        }
        seen.into_iter().collect()
    }
}

/// Number of unary constructors in a value; the length of a word.
pub fn word_length(sig: &Signature, v: &Value) -> usize {
    v.count_symbol(&|f| sig.is_constructor(f) && sig.arity(f) == 1)
}

/// Inputs of total word length `n` for `main`: all of them when there are at
/// most `cap`, otherwise `samples` seeded draws. The flag reports sampling.
pub fn word_inputs(program: &Program, main: SymId, n: usize, cap: usize, samples: usize, seed: u64) -> Result<(Vec<Vec<Value>>, bool)> {
    let sig = &program.signature;
    if !program.is_word_program() {
        return Err(Error::NotWordProgram("a constructor has arity above 1".into()));
    }
    let unary: Vec<SymId> = sig.constructors().into_iter().filter(|&c| sig.arity(c) == 1).collect();
    let nullary: Vec<SymId> = sig.constructors().into_iter().filter(|&c| sig.arity(c) == 0).collect();
    let k = sig.arity(main);
    if k == 0 {
        return Ok((vec![Vec::new()], false));
    }
    if nullary.is_empty() || (unary.is_empty() && n > 0) {
        return Ok((Vec::new(), false));
    }
    let comps = compositions(n, k);
    let count: f64 = comps
        .iter()
        .map(|c| {
            c.iter()
                .map(|&l| (unary.len() as f64).powi(l as i32) * nullary.len() as f64)
                .product::<f64>()
        })
        .sum();
    if count <= cap as f64 {
        let mut out = Vec::new();
        for c in &comps {
            let per_arg: Vec<Vec<Value>> = c.iter().map(|&l| all_words(&unary, &nullary, l)).collect();
            let mut tuples: Vec<Vec<Value>> = vec![Vec::new()];
            for words in per_arg {
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        words.iter().map(move |w| {
                            let mut t2 = t.clone();
                            t2.push(w.clone());
                            t2
                        })
                    })
                    .collect();
            }
            out.extend(tuples);
        }
        return Ok((out, false));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut out = BTreeSet::new();
    for _ in 0..samples {
        let c = &comps[rng.random_range(0..comps.len())];
        let tuple: Vec<Value> = c
            .iter()
            .map(|&l| {
                let mut w = Term::constant(nullary[rng.random_range(0..nullary.len())]);
                for _ in 0..l {
                    w = Term::App(unary[rng.random_range(0..unary.len())], vec![w]);
                }
                w
            })
            .collect();
        out.insert(tuple);
    }
    Ok((out.into_iter().collect(), true))
}

/// All words of length `l`, in lexicographic order of declaration.
pub fn all_words(unary: &[SymId], nullary: &[SymId], l: usize) -> Vec<Value> {
    let mut words: Vec<Value> = nullary.iter().map(|&c| Term::constant(c)).collect();
    for _ in 0..l {
        words = unary
            .iter()
            .flat_map(|&u| words.iter().map(move |w| Term::App(u, vec![w.clone()])))
            .collect();
    }
    words
}

/// Ordered k-tuples of naturals summing to n.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if n == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
