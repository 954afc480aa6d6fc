use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Budget, ChoicePolicy, DerivationProof, Judgement, Rule};
use crate::error::{Error, Result};
use crate::term::{apply_subst, matching_equations, Program, Term};

/// Outcome of a cbv run. `truncated` is set when an exhaustive enumeration
/// dropped derivations because of the budget.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub proofs: Vec<DerivationProof>,
    pub truncated: bool,
}

pub fn eval_cbv(program: &Program, term: &Term, policy: ChoicePolicy, budget: Budget) -> Result<Evaluation> {
    check_ground(program, term)?;
    match policy {
        ChoicePolicy::Exhaustive => {
            let mut en = Enumerator {
                program,
                budget,
                memo: HashMap::new(),
                in_progress: HashSet::new(),
                truncated: false,
            };
            let (list, _) = en.term(term, 0)?;
            if list.is_empty() && !en.truncated {
                return Err(Error::NoMatchingEquation(format!(
                    "no derivation of {} exists",
                    program.show(term)
                )));
            }
            let proofs = list
                .iter()
                .map(|j| DerivationProof::new(program, j.clone(), false, Vec::new()))
                .collect();
            Ok(Evaluation {
                proofs,
                truncated: en.truncated,
            })
        }
        _ => {
            let mut ev = Single {
                program,
                budget,
                rules: 0,
                rng: match policy {
                    ChoicePolicy::Seeded(k) => Some(ChaCha8Rng::seed_from_u64(k)),
                    _ => None,
                },
            };
            let root = ev.eval(term, 1)?;
            Ok(Evaluation {
                proofs: vec![DerivationProof::new(program, root, false, Vec::new())],
                truncated: false,
            })
        }
    }
}

/// FirstMatch derivation.
pub fn eval_first(program: &Program, term: &Term, budget: Budget) -> Result<DerivationProof> {
    Ok(eval_cbv(program, term, ChoicePolicy::FirstMatch, budget)?.proofs.remove(0))
}

pub(super) fn check_ground(program: &Program, term: &Term) -> Result<()> {
    if !term.is_ground() {
        return Err(Error::Usage(format!("term {} is not ground", program.show(term))));
    }
    Ok(())
}

struct Single<'p> {
    program: &'p Program,
    budget: Budget,
    rules: u64,
    rng: Option<ChaCha8Rng>,
}

impl Single<'_> {
    fn tick(&mut self, depth: usize) -> Result<()> {
        self.rules += 1;
        if self.rules > self.budget.max_rules {
            return Err(Error::BudgetExceeded(format!("more than {} rules", self.budget.max_rules)));
        }
        if depth > self.budget.max_depth {
            return Err(Error::BudgetExceeded(format!("depth above {}", self.budget.max_depth)));
        }
        Ok(())
    }

    fn eval(&mut self, t: &Term, depth: usize) -> Result<Arc<Judgement>> {
        let sig = &self.program.signature;
        self.tick(depth)?;
        let Term::App(f, args) = t else {
            unreachable!("ground term")
        };
        if sig.is_constructor(*f) {
            let children = args
                .iter()
                .map(|a| self.eval(a, depth + 1))
                .collect::<Result<Vec<_>>>()?;
            let result = Term::App(*f, children.iter().map(|c| c.result.clone()).collect());
            return Ok(Arc::new(Judgement::new(t.clone(), result, Rule::Constructor, children, None)));
        }
        if !t.is_call_on_values(sig) {
            let mut children = args
                .iter()
                .map(|a| self.eval(a, depth + 1))
                .collect::<Result<Vec<_>>>()?;
            let call = Term::App(*f, children.iter().map(|c| c.result.clone()).collect());
            let last = self.eval(&call, depth + 1)?;
            let result = last.result.clone();
            children.push(last);
            return Ok(Arc::new(Judgement::new(t.clone(), result, Rule::Split, children, None)));
        }
        let mut matches = matching_equations(self.program, t)?;
        if matches.is_empty() {
            return Err(Error::NoMatchingEquation(self.program.show(t)));
        }
        let pick = match &mut self.rng {
            Some(rng) if matches.len() > 1 => rng.random_range(0..matches.len()),
            _ => 0,
        };
        let (e, sigma) = matches.swap_remove(pick);
        let activation = apply_subst(&e.rhs, &sigma)?;
        let child = self.eval(&activation, depth + 1)?;
        let result = child.result.clone();
        Ok(Arc::new(Judgement::new(
            t.clone(),
            result,
            Rule::Function,
            vec![child],
            Some(e.index),
        )))
    }
}

type List = Arc<Vec<Arc<Judgement>>>;

/// Backtracking enumeration with sharing: derivations of a call are computed
/// once and reused wherever that call occurs.
struct Enumerator<'p> {
    program: &'p Program,
    budget: Budget,
    memo: HashMap<Term, List>,
    in_progress: HashSet<Term>,
    truncated: bool,
}

impl Enumerator<'_> {
    fn keep(&mut self, j: &Judgement) -> bool {
        let ok = j.counts.rules <= self.budget.max_rules && j.counts.height <= self.budget.max_depth;
        if !ok {
            self.truncated = true;
        }
        ok
    }

    fn cap(&mut self, v: &mut Vec<Arc<Judgement>>) {
        if v.len() > self.budget.max_derivations {
            v.truncate(self.budget.max_derivations);
            self.truncated = true;
        }
    }

    /// Derivations of each argument, combined left to right.
    fn product(&mut self, args: &[Term], depth: usize) -> Result<(Vec<Vec<Arc<Judgement>>>, bool)> {
        let mut combos: Vec<Vec<Arc<Judgement>>> = vec![Vec::new()];
        let mut local_trunc = false;
        for a in args {
            let (list, tr) = self.term(a, depth + 1)?;
            local_trunc |= tr;
            let mut next = Vec::new();
            'outer: for c in &combos {
                for j in list.iter() {
                    let mut c2 = c.clone();
                    c2.push(j.clone());
                    next.push(c2);
                    if next.len() >= self.budget.max_derivations {
                        if next.len() < combos.len() * list.len() {
                            self.truncated = true;
                            local_trunc = true;
                        }
                        break 'outer;
                    }
                }
            }
            combos = next;
        }
        Ok((combos, local_trunc))
    }

    /// Returns the derivation list and whether it may be incomplete.
    fn term(&mut self, t: &Term, depth: usize) -> Result<(List, bool)> {
        let sig = &self.program.signature;
        if t.is_value(sig) {
            return Ok((Arc::new(vec![Judgement::of_value(t)]), false));
        }
        if depth > self.budget.max_depth {
            self.truncated = true;
            return Ok((Arc::new(Vec::new()), true));
        }
        let Term::App(f, args) = t else {
            unreachable!("ground term")
        };
        if sig.is_constructor(*f) {
            let (combos, tr) = self.product(args, depth)?;
            let mut out = Vec::new();
            for children in combos {
                let result = Term::App(*f, children.iter().map(|c| c.result.clone()).collect());
                let j = Judgement::new(t.clone(), result, Rule::Constructor, children, None);
                if self.keep(&j) {
                    out.push(Arc::new(j));
                }
            }
            return Ok((Arc::new(out), tr));
        }
        if !t.is_call_on_values(sig) {
            let (combos, mut tr) = self.product(args, depth)?;
            let mut out = Vec::new();
            for children in combos {
                let call = Term::App(*f, children.iter().map(|c| c.result.clone()).collect());
                let (calls, tr2) = self.term(&call, depth + 1)?;
                tr |= tr2;
                for last in calls.iter() {
                    let mut ch = children.clone();
                    ch.push(last.clone());
                    let j = Judgement::new(t.clone(), last.result.clone(), Rule::Split, ch, None);
                    if self.keep(&j) {
                        out.push(Arc::new(j));
                    }
                    if out.len() >= self.budget.max_derivations {
                        break;
                    }
                }
                if out.len() >= self.budget.max_derivations {
                    self.truncated = true;
                    tr = true;
                    break;
                }
            }
            return Ok((Arc::new(out), tr));
        }
        if let Some(list) = self.memo.get(t) {
            return Ok((list.clone(), false));
        }
        if !self.in_progress.insert(t.clone()) {
            // The call depends on itself: only infinite derivations pass here.
            self.truncated = true;
            return Ok((Arc::new(Vec::new()), true));
        }
        let mut out = Vec::new();
        let mut tr = false;
        for (e, sigma) in matching_equations(self.program, t)? {
            let activation = apply_subst(&e.rhs, &sigma)?;
            let (list, tr2) = self.term(&activation, depth + 1)?;
            tr |= tr2;
            for child in list.iter() {
                let j = Judgement::new(
                    t.clone(),
                    child.result.clone(),
                    Rule::Function,
                    vec![child.clone()],
                    Some(e.index),
                );
                if self.keep(&j) {
                    out.push(Arc::new(j));
                }
            }
        }
        self.in_progress.remove(t);
        self.cap(&mut out);
        let list = Arc::new(out);
        if !tr {
            self.memo.insert(t.clone(), list.clone());
        }
        Ok((list, tr))
    }
}
