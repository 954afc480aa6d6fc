//! Signatures, terms, equations and programs, with matching and substitution.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Constructor,
    Function,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
    pub arity: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    symbols: Vec<Symbol>,
    by_name: HashMap<String, SymId>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, kind: SymbolKind, arity: usize) -> Result<SymId> {
        if self.by_name.contains_key(name) {
            return Err(Error::Malformed(format!("symbol `{name}` declared twice")));
        }
        let id = SymId(self.symbols.len() as u32);
        self.symbols.push(Symbol {
            name: name.to_string(),
            kind,
            arity,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<SymId> {
        self.by_name.get(name).copied()
    }

    pub fn symbol(&self, id: SymId) -> &Symbol {
        &self.symbols[id.0 as usize]
    }

    pub fn name(&self, id: SymId) -> &str {
        &self.symbol(id).name
    }

    pub fn arity(&self, id: SymId) -> usize {
        self.symbol(id).arity
    }

    pub fn is_constructor(&self, id: SymId) -> bool {
        self.symbol(id).kind == SymbolKind::Constructor
    }

    pub fn is_function(&self, id: SymId) -> bool {
        self.symbol(id).kind == SymbolKind::Function
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SymId> + '_ {
        (0..self.symbols.len() as u32).map(SymId)
    }

    pub fn constructors(&self) -> Vec<SymId> {
        self.ids().filter(|&s| self.is_constructor(s)).collect()
    }

    pub fn functions(&self) -> Vec<SymId> {
        self.ids().filter(|&s| self.is_function(s)).collect()
    }

    pub fn max_arity(&self) -> usize {
        self.symbols.iter().map(|s| s.arity).max().unwrap_or(0)
    }

    /// Renders a term in the concrete syntax; unary constructors are written as chains.
    pub fn show(&self, t: &Term) -> String {
        let mut out = String::new();
        self.write_term(t, &mut out);
        out
    }

    fn write_term(&self, t: &Term, out: &mut String) {
        match t {
            Term::Var(x) => out.push_str(x),
            Term::App(f, args) => {
                out.push_str(self.name(*f));
                if args.is_empty() {
                    return;
                }
                if args.len() == 1 && self.is_constructor(*f) {
                    out.push(' ');
                    self.write_term(&args[0], out);
                    return;
                }
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.write_term(a, out);
                }
                out.push(')');
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    App(SymId, Vec<Term>),
}

/// A term built from constructors only.
pub type Value = Term;

/// Variable name to value.
pub type Substitution = BTreeMap<String, Value>;

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn app(f: SymId, args: Vec<Term>) -> Term {
        Term::App(f, args)
    }

    pub fn constant(f: SymId) -> Term {
        Term::App(f, Vec::new())
    }

    pub fn head(&self) -> Option<SymId> {
        match self {
            Term::Var(_) => None,
            Term::App(f, _) => Some(*f),
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Var(_) => &[],
            Term::App(_, args) => args,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn is_value(&self, sig: &Signature) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(f, args) => sig.is_constructor(*f) && args.iter().all(|a| a.is_value(sig)),
        }
    }

    pub fn is_pattern(&self, sig: &Signature) -> bool {
        match self {
            Term::Var(_) => true,
            Term::App(f, args) => sig.is_constructor(*f) && args.iter().all(|a| a.is_pattern(sig)),
        }
    }

    /// True for `f(v1..vn)` with `f` a function and every `vi` a value.
    pub fn is_call_on_values(&self, sig: &Signature) -> bool {
        match self {
            Term::App(f, args) => sig.is_function(*f) && args.iter().all(|a| a.is_value(sig)),
            Term::Var(_) => false,
        }
    }

    pub fn has_function(&self, sig: &Signature) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(f, args) => sig.is_function(*f) || args.iter().any(|a| a.has_function(sig)),
        }
    }

    /// Variables in order of first occurrence, without repetition.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(x) => {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Number of occurrences of each variable.
    pub fn var_occurrences(&self, out: &mut BTreeMap<String, usize>) {
        match self {
            Term::Var(x) => *out.entry(x.clone()).or_default() += 1,
            Term::App(_, args) => args.iter().for_each(|a| a.var_occurrences(out)),
        }
    }

    /// All subterm occurrences in pre-order, including `self`.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.collect_subterms(&mut out);
        out
    }

    fn collect_subterms<'a>(&'a self, out: &mut Vec<&'a Term>) {
        out.push(self);
        for a in self.args() {
            a.collect_subterms(out);
        }
    }

    pub fn has_subterm(&self, t: &Term) -> bool {
        self == t || self.args().iter().any(|a| a.has_subterm(t))
    }

    pub fn is_proper_subterm_of(&self, t: &Term) -> bool {
        t.args().iter().any(|a| a.has_subterm(self))
    }

    /// Function-headed subterm occurrences in pre-order with their positions.
    pub fn function_subterms(&self, sig: &Signature) -> Vec<(Vec<usize>, &Term)> {
        let mut out = Vec::new();
        self.collect_fn_subterms(sig, &mut Vec::new(), &mut out);
        out
    }

    fn collect_fn_subterms<'a>(
        &'a self,
        sig: &Signature,
        pos: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, &'a Term)>,
    ) {
        if let Term::App(f, args) = self {
            if sig.is_function(*f) {
                out.push((pos.clone(), self));
            }
            for (i, a) in args.iter().enumerate() {
                pos.push(i);
                a.collect_fn_subterms(sig, pos, out);
                pos.pop();
            }
        }
    }

    pub fn count_symbol(&self, pred: &dyn Fn(SymId) -> bool) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(f, args) => {
                usize::from(pred(*f)) + args.iter().map(|a| a.count_symbol(pred)).sum::<usize>()
            }
        }
    }

    pub fn symbols(&self, out: &mut Vec<SymId>) {
        if let Term::App(f, args) = self {
            out.push(*f);
            args.iter().for_each(|a| a.symbols(out));
        }
    }

    /// Replaces symbols through `map`, keeping structure.
    pub fn map_symbols(&self, map: &dyn Fn(SymId) -> SymId) -> Term {
        match self {
            Term::Var(x) => Term::Var(x.clone()),
            Term::App(f, args) => Term::App(map(*f), args.iter().map(|a| a.map_symbols(map)).collect()),
        }
    }
}

/// Structural matching; repeated variables must bind equal sub-values.
pub fn match_pattern(pattern: &Term, value: &Term) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    match_into(pattern, value, &mut sigma).then_some(sigma)
}

pub fn match_patterns(patterns: &[Term], values: &[Term]) -> Option<Substitution> {
    if patterns.len() != values.len() {
        return None;
    }
    let mut sigma = Substitution::new();
    patterns
        .iter()
        .zip(values)
        .all(|(p, v)| match_into(p, v, &mut sigma))
        .then_some(sigma)
}

fn match_into(pattern: &Term, value: &Term, sigma: &mut Substitution) -> bool {
    match (pattern, value) {
        (Term::Var(x), v) => match sigma.get(x) {
            Some(bound) => bound == v,
            None => {
                sigma.insert(x.clone(), v.clone());
                true
            }
        },
        (Term::App(f, ps), Term::App(g, vs)) => {
            f == g && ps.len() == vs.len() && ps.iter().zip(vs).all(|(p, v)| match_into(p, v, sigma))
        }
        (Term::App(..), Term::Var(_)) => false,
    }
}

pub fn apply_subst(term: &Term, sigma: &Substitution) -> Result<Term> {
    match term {
        Term::Var(x) => sigma.get(x).cloned().ok_or_else(|| Error::UnboundVariable(x.clone())),
        Term::App(f, args) => Ok(Term::App(
            *f,
            args.iter().map(|a| apply_subst(a, sigma)).collect::<Result<_>>()?,
        )),
    }
}

/// Substitution whose range may contain arbitrary terms; unbound variables stay.
pub fn instantiate(term: &Term, sigma: &BTreeMap<String, Term>) -> Term {
    match term {
        Term::Var(x) => sigma.get(x).cloned().unwrap_or_else(|| term.clone()),
        Term::App(f, args) => Term::App(*f, args.iter().map(|a| instantiate(a, sigma)).collect()),
    }
}

/// Whether two patterns with disjoint variables have a common instance.
/// Exact for linear patterns; otherwise an over-approximation.
pub fn patterns_overlap(p: &Term, q: &Term) -> bool {
    match (p, q) {
        (Term::Var(_), _) | (_, Term::Var(_)) => true,
        (Term::App(f, ps), Term::App(g, qs)) => {
            f == g && ps.len() == qs.len() && ps.iter().zip(qs).all(|(a, b)| patterns_overlap(a, b))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub function: SymId,
    pub patterns: Vec<Term>,
    pub rhs: Term,
    pub index: usize,
}

impl Equation {
    pub fn lhs(&self) -> Term {
        Term::App(self.function, self.patterns.clone())
    }

    /// Lhs variables in left-to-right first-occurrence order.
    pub fn lhs_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        for p in &self.patterns {
            p.collect_vars(&mut out);
        }
        out
    }

    pub fn is_left_linear(&self) -> bool {
        let mut occ = BTreeMap::new();
        self.patterns.iter().for_each(|p| p.var_occurrences(&mut occ));
        occ.values().all(|&n| n == 1)
    }
}

/// Optional declarations carried alongside a program text.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Annotations {
    pub order: Option<String>,
    pub qi: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub signature: Signature,
    pub equations: Vec<Equation>,
    pub main: SymId,
    pub annotations: Annotations,
    by_function: Vec<Vec<usize>>,
}

impl Program {
    /// Validates the structural invariants and renumbers equations by position.
    pub fn new(signature: Signature, mut equations: Vec<Equation>, main: SymId) -> Result<Program> {
        if (main.0 as usize) >= signature.len() || !signature.is_function(main) {
            return Err(Error::Malformed("main must be a declared function symbol".into()));
        }
        let mut by_function = vec![Vec::new(); signature.len()];
        for (i, e) in equations.iter_mut().enumerate() {
            e.index = i;
            check_well_formed(&signature, &e.lhs())?;
            check_well_formed(&signature, &e.rhs)?;
            if !signature.is_function(e.function) {
                return Err(Error::Malformed(format!(
                    "equation {i}: lhs head `{}` is not a function",
                    signature.name(e.function)
                )));
            }
            if let Some(p) = e.patterns.iter().find(|p| !p.is_pattern(&signature)) {
                return Err(Error::Malformed(format!(
                    "equation {i}: `{}` is not a pattern",
                    signature.show(p)
                )));
            }
            let lhs_vars = e.lhs_vars();
            if let Some(x) = e.rhs.vars().into_iter().find(|x| !lhs_vars.contains(x)) {
                return Err(Error::UnboundVariable(format!("{x} (rhs of equation {i} not bound by lhs)")));
            }
            by_function[e.function.0 as usize].push(i);
        }
        Ok(Program {
            signature,
            equations,
            main,
            annotations: Annotations::default(),
            by_function,
        })
    }

    pub fn with_annotations(mut self, annotations: Annotations) -> Program {
        self.annotations = annotations;
        self
    }

    pub fn equations_for(&self, f: SymId) -> impl Iterator<Item = &Equation> + '_ {
        self.by_function[f.0 as usize].iter().map(move |&i| &self.equations[i])
    }

    pub fn show(&self, t: &Term) -> String {
        self.signature.show(t)
    }

    pub fn show_equation(&self, e: &Equation) -> String {
        format!("{} -> {}", self.show(&e.lhs()), self.show(&e.rhs))
    }

    pub fn sym(&self, name: &str) -> Result<SymId> {
        self.signature
            .lookup(name)
            .ok_or_else(|| Error::UndeclaredSymbol(name.to_string()))
    }

    /// Every constructor has arity at most 1.
    pub fn is_word_program(&self) -> bool {
        self.signature
            .constructors()
            .iter()
            .all(|&c| self.signature.arity(c) <= 1)
    }

    /// Left-linear and pairwise non-overlapping left-hand sides.
    pub fn orthogonality_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for e in &self.equations {
            if !e.is_left_linear() {
                out.push(format!("equation {} is not left-linear", e.index));
            }
        }
        for (i, a) in self.equations.iter().enumerate() {
            for b in &self.equations[i + 1..] {
                if a.function == b.function
                    && a.patterns.iter().zip(&b.patterns).all(|(p, q)| patterns_overlap(p, q))
                {
                    out.push(format!("equations {} and {} overlap", a.index, b.index));
                }
            }
        }
        out
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonality_violations().is_empty()
    }

    /// Canonical program text; `parse_program(p.to_text()) == p`.
    pub fn to_text(&self) -> String {
        let sig = &self.signature;
        let decl = |ids: Vec<SymId>| {
            ids.iter()
                .map(|&s| format!("{}/{}", sig.name(s), sig.arity(s)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = format!(
            "constructors: {}\nfunctions: {}\n",
            decl(sig.constructors()),
            decl(sig.functions())
        );
        for e in &self.equations {
            out.push_str(&self.show_equation(e));
            out.push('\n');
        }
        out.push_str(&format!("main: {}\n", sig.name(self.main)));
        if let Some(order) = &self.annotations.order {
            out.push_str(&format!("order: {order}\n"));
        }
        for q in &self.annotations.qi {
            out.push_str(&format!("{q}\n"));
        }
        out
    }
}

fn check_well_formed(sig: &Signature, t: &Term) -> Result<()> {
    if let Term::App(f, args) = t {
        if (f.0 as usize) >= sig.len() {
            return Err(Error::UndeclaredSymbol(format!("#{}", f.0)));
        }
        if sig.arity(*f) != args.len() {
            return Err(Error::ArityMismatch {
                symbol: sig.name(*f).to_string(),
                expected: sig.arity(*f),
                found: args.len(),
            });
        }
        for a in args {
            check_well_formed(sig, a)?;
        }
    }
    Ok(())
}

/// All equations whose patterns match the call, in program order.
pub fn matching_equations<'p>(program: &'p Program, call: &Term) -> Result<Vec<(&'p Equation, Substitution)>> {
    let sig = &program.signature;
    match call {
        Term::App(f, args) if sig.is_function(*f) => {
            if let Some(a) = args.iter().find(|a| !a.is_value(sig)) {
                return Err(Error::NotACall(format!("argument `{}` is not a value", sig.show(a))));
            }
            Ok(program
                .equations_for(*f)
                .filter_map(|e| match_patterns(&e.patterns, args).map(|s| (e, s)))
                .collect())
        }
        _ => Err(Error::NotACall(sig.show(call))),
    }
}
