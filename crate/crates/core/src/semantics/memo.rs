use std::collections::HashMap;
use std::sync::Arc;

use super::cbv::check_ground;
use super::{Budget, CacheEvent, CacheEventKind, DerivationProof, Judgement, Rule};
use crate::error::{Error, Result};
use crate::term::{apply_subst, matching_equations, Program, Term, Value};

/// Memoised cbv evaluation. Read fires whenever the cache holds the call;
/// Update only otherwise. Non-orthogonal programs are refused unless
/// `allow_nonconfluent` is set, in which case the first matching equation is used.
pub fn eval_memo(program: &Program, term: &Term, budget: Budget, allow_nonconfluent: bool) -> Result<DerivationProof> {
    check_ground(program, term)?;
    if !allow_nonconfluent {
        let v = program.orthogonality_violations();
        if !v.is_empty() {
            return Err(Error::NonConfluentProgram(v.join("; ")));
        }
    }
    let mut m = Memo {
        program,
        budget,
        rules: 0,
        cache: HashMap::new(),
        trace: Vec::new(),
    };
    let root = m.eval(term, 1)?;
    Ok(DerivationProof::new(program, root, true, m.trace))
}

struct Memo<'p> {
    program: &'p Program,
    budget: Budget,
    rules: u64,
    cache: HashMap<Term, Value>,
    trace: Vec<CacheEvent>,
}

impl Memo<'_> {
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
        if sig.is_constructor(*f) || !t.is_call_on_values(sig) {
            let mut children = args
                .iter()
                .map(|a| self.eval(a, depth + 1))
                .collect::<Result<Vec<_>>>()?;
            let values: Vec<Value> = children.iter().map(|c| c.result.clone()).collect();
            if sig.is_constructor(*f) {
                let result = Term::App(*f, values);
                return Ok(Arc::new(Judgement::new(t.clone(), result, Rule::Constructor, children, None)));
            }
            let last = self.eval(&Term::App(*f, values), depth + 1)?;
            let result = last.result.clone();
            children.push(last);
            return Ok(Arc::new(Judgement::new(t.clone(), result, Rule::Split, children, None)));
        }
        if let Some(v) = self.cache.get(t) {
            let v = v.clone();
            self.trace.push(CacheEvent {
                kind: CacheEventKind::Read,
                function: *f,
                args: args.clone(),
                result: v.clone(),
            });
            return Ok(Arc::new(Judgement::new(t.clone(), v, Rule::Read, Vec::new(), None)));
        }
        let matches = matching_equations(self.program, t)?;
        let Some((e, sigma)) = matches.into_iter().next() else {
            return Err(Error::NoMatchingEquation(self.program.show(t)));
        };
        let activation = apply_subst(&e.rhs, &sigma)?;
        let child = self.eval(&activation, depth + 1)?;
        let result = child.result.clone();
        self.cache.insert(t.clone(), result.clone());
        self.trace.push(CacheEvent {
            kind: CacheEventKind::Update,
            function: *f,
            args: args.clone(),
            result: result.clone(),
        });
        Ok(Arc::new(Judgement::new(
            t.clone(),
            result,
            Rule::Update,
            vec![child],
            Some(e.index),
        )))
    }
}
