//! Precedences and the product path orderings PPO (strict constructors) and
//! EPPO (same-arity constructors equivalent).

use std::collections::HashMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::term::{Program, Signature, SymId, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Mode {
    #[serde(rename = "PPO")]
    Ppo,
    #[serde(rename = "EPPO")]
    Eppo,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s.to_ascii_lowercase().as_str() {
            "ppo" => Ok(Mode::Ppo),
            "eppo" => Ok(Mode::Eppo),
            _ => Err(Error::Usage(format!("unknown mode `{s}` (expected ppo or eppo)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Attributes {
    pub separating: bool,
    pub compatible: bool,
    pub fair: bool,
    pub strict_ctors: bool,
}

/// Equivalence classes of symbols with a strict partial order on classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Precedence {
    class_of: Vec<usize>,
    classes: Vec<Vec<SymId>>,
    /// `below[i][j]`: class i ≺ class j, transitively closed.
    below: Vec<Vec<bool>>,
}

impl Precedence {
    /// Builds a separating precedence from function relations; the constructor
    /// part is strict (PPO) or fair by arity (EPPO).
    pub fn build(sig: &Signature, equiv: &[(SymId, SymId)], less: &[(SymId, SymId)], mode: Mode) -> Result<Precedence> {
        let n = sig.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        let union = |p: &mut Vec<usize>, a: usize, b: usize| {
            let (ra, rb) = (find(p, a), find(p, b));
            if ra != rb {
                p[ra.max(rb)] = ra.min(rb);
            }
        };
        for &(a, b) in equiv {
            if sig.is_constructor(a) != sig.is_constructor(b) {
                return Err(Error::InvalidPrecedence(format!(
                    "`{}` and `{}` mix a constructor and a function",
                    sig.name(a),
                    sig.name(b)
                )));
            }
            if mode == Mode::Ppo && sig.is_constructor(a) && a != b {
                return Err(Error::InvalidPrecedence(format!(
                    "PPO needs strict constructors but `{}` ~ `{}`",
                    sig.name(a),
                    sig.name(b)
                )));
            }
            if sig.is_constructor(a) && sig.arity(a) != sig.arity(b) {
                return Err(Error::InvalidPrecedence(format!(
                    "constructors `{}` and `{}` have different arities",
                    sig.name(a),
                    sig.name(b)
                )));
            }
            union(&mut parent, a.0 as usize, b.0 as usize);
        }
        if mode == Mode::Eppo {
            let ctors = sig.constructors();
            for (i, &a) in ctors.iter().enumerate() {
                for &b in &ctors[i + 1..] {
                    if sig.arity(a) == sig.arity(b) {
                        union(&mut parent, a.0 as usize, b.0 as usize);
                    }
                }
            }
        }
        let mut root_class = HashMap::new();
        let mut class_of = vec![0; n];
        let mut classes: Vec<Vec<SymId>> = Vec::new();
        for (s, slot) in class_of.iter_mut().enumerate() {
            let r = find(&mut parent, s);
            let c = *root_class.entry(r).or_insert_with(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            *slot = c;
            classes[c].push(SymId(s as u32));
        }
        let k = classes.len();
        let mut edges = vec![Vec::new(); k];
        for &(a, b) in less {
            if sig.is_function(a) != sig.is_function(b) && sig.is_function(a) {
                return Err(Error::InvalidPrecedence(format!(
                    "function `{}` cannot be below constructor `{}`",
                    sig.name(a),
                    sig.name(b)
                )));
            }
            if sig.is_constructor(a) && sig.is_constructor(b) {
                return Err(Error::InvalidPrecedence(
                    "constructors are only related by equivalence".into(),
                ));
            }
            edges[class_of[b.0 as usize]].push(class_of[a.0 as usize]);
        }
        let ctor_classes: Vec<usize> = (0..k).filter(|&c| sig.is_constructor(classes[c][0])).collect();
        for c in 0..k {
            if sig.is_function(classes[c][0]) {
                edges[c].extend(ctor_classes.iter().copied());
            }
        }
        let mut below = vec![vec![false; k]; k];
        for start in 0..k {
            let mut stack = edges[start].clone();
            while let Some(c) = stack.pop() {
                if !below[c][start] {
                    below[c][start] = true;
                    stack.extend(edges[c].iter().copied());
                }
            }
        }
        if let Some(c) = (0..k).find(|&c| below[c][c]) {
            return Err(Error::InvalidPrecedence(format!(
                "cycle through `{}`",
                sig.name(classes[c][0])
            )));
        }
        Ok(Precedence {
            class_of,
            classes,
            below,
        })
    }

    /// Parses `append < f ; s0 ~ s1`. Chains may use `<`, `>` and `~`.
    pub fn parse(sig: &Signature, text: &str, mode: Mode) -> Result<Precedence> {
        let mut equiv = Vec::new();
        let mut less = Vec::new();
        for stmt in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let spaced = stmt.replace('<', " < ").replace('>', " > ").replace('~', " ~ ");
            let toks: Vec<&str> = spaced.split_whitespace().collect();
            if toks.len().is_multiple_of(2) {
                return Err(Error::InvalidPrecedence(format!("malformed chain `{stmt}`")));
            }
            let sym = |name: &str| sig.lookup(name).ok_or_else(|| Error::UndeclaredSymbol(name.to_string()));
            let mut prev = sym(toks[0])?;
            for pair in toks[1..].chunks(2) {
                let next = sym(pair[1])?;
                match pair[0] {
                    "<" => less.push((prev, next)),
                    ">" => less.push((next, prev)),
                    "~" => equiv.push((prev, next)),
                    op => return Err(Error::InvalidPrecedence(format!("unknown operator `{op}`"))),
                }
                prev = next;
            }
        }
        Precedence::build(sig, &equiv, &less, mode)
    }

    pub fn class_of(&self, f: SymId) -> usize {
        self.class_of[f.0 as usize]
    }

    pub fn classes(&self) -> &[Vec<SymId>] {
        &self.classes
    }

    /// f ≺ g
    pub fn lt(&self, f: SymId, g: SymId) -> bool {
        self.below[self.class_of(f)][self.class_of(g)]
    }

    pub fn equiv(&self, f: SymId, g: SymId) -> bool {
        self.class_of(f) == self.class_of(g)
    }

    pub fn le(&self, f: SymId, g: SymId) -> bool {
        self.equiv(f, g) || self.lt(f, g)
    }

    pub fn attributes(&self, program: &Program) -> Attributes {
        let sig = &program.signature;
        let ctors = sig.constructors();
        let funs = sig.functions();
        let separating = ctors.iter().all(|&c| funs.iter().all(|&f| self.lt(c, f)));
        let compatible = program.equations.iter().all(|e| {
            let mut syms = Vec::new();
            e.rhs.symbols(&mut syms);
            syms.iter().all(|&g| sig.is_constructor(g) || self.le(g, e.function))
        });
        let mut fair = true;
        let mut strict = true;
        for (i, &a) in ctors.iter().enumerate() {
            for &b in &ctors[i + 1..] {
                let same = self.equiv(a, b);
                if sig.arity(a) == sig.arity(b) && !same {
                    fair = false;
                }
                if same {
                    strict = false;
                }
            }
        }
        Attributes {
            separating,
            compatible,
            fair,
            strict_ctors: strict,
        }
    }

    /// rk(f) = 1 + max rk(g) over functions g ≺ f; constructors have rank 0.
    pub fn ranks(&self, sig: &Signature) -> Vec<usize> {
        let k = self.classes.len();
        let mut class_rank: Vec<Option<usize>> = vec![None; k];
        fn go(c: usize, p: &Precedence, sig: &Signature, memo: &mut Vec<Option<usize>>) -> usize {
            if let Some(r) = memo[c] {
                return r;
            }
            let r = if sig.is_constructor(p.classes[c][0]) {
                0
            } else {
                1 + (0..p.classes.len())
                    .filter(|&d| p.below[d][c] && sig.is_function(p.classes[d][0]))
                    .map(|d| go(d, p, sig, memo))
                    .max()
                    .unwrap_or(0)
            };
            memo[c] = Some(r);
            r
        }
        (0..k).for_each(|c| {
            go(c, self, sig, &mut class_rank);
        });
        self.class_of.iter().map(|&c| class_rank[c].unwrap()).collect()
    }

    pub fn to_text(&self, sig: &Signature) -> String {
        let mut parts = Vec::new();
        for class in &self.classes {
            if class.len() > 1 {
                parts.push(class.iter().map(|&s| sig.name(s)).collect::<Vec<_>>().join(" ~ "));
            }
        }
        let k = self.classes.len();
        let funs: Vec<usize> = (0..k).filter(|&c| sig.is_function(self.classes[c][0])).collect();
        for &j in &funs {
            let under: Vec<usize> = funs.iter().copied().filter(|&i| self.below[i][j]).collect();
            let mut indirect = vec![false; k];
            for &m in &under {
                for &i in &under {
                    if self.below[i][m] {
                        indirect[i] = true;
                    }
                }
            }
            for &i in under.iter().filter(|&&i| !indirect[i]) {
                parts.push(format!(
                    "{} < {}",
                    sig.name(self.classes[i][0]),
                    sig.name(self.classes[j][0])
                ));
            }
        }
        parts.join(" ; ")
    }
}

/// Memoised decision procedure for s ≺ t.
pub struct Comparator<'a> {
    sig: &'a Signature,
    prec: &'a Precedence,
    memo: HashMap<(usize, usize), bool>,
}

impl<'a> Comparator<'a> {
    pub fn new(sig: &'a Signature, prec: &'a Precedence) -> Self {
        Comparator {
            sig,
            prec,
            memo: HashMap::new(),
        }
    }

    pub fn lt(&mut self, s: &Term, t: &Term) -> bool {
        let key = (s as *const Term as usize, t as *const Term as usize);
        if let Some(&r) = self.memo.get(&key) {
            return r;
        }
        let r = self.lt_uncached(s, t);
        self.memo.insert(key, r);
        r
    }

    fn lt_uncached(&mut self, s: &Term, t: &Term) -> bool {
        let Term::App(f, ts) = t else {
            return false;
        };
        if ts.iter().any(|ti| ti == s || self.lt(s, ti)) {
            return true;
        }
        let Term::App(g, ss) = s else {
            return false;
        };
        if self.prec.lt(*g, *f) {
            return ss.iter().all(|si| self.lt(si, t));
        }
        if self.prec.equiv(*g, *f) && ss.len() == ts.len() {
            return self.product_lt(ss, ts) && ss.iter().all(|si| self.lt(si, t));
        }
        false
    }

    /// (m) ≺^p (n): every m_i ⪯ n_i and some m_j ≺ n_j.
    pub fn product_lt(&mut self, ms: &[Term], ns: &[Term]) -> bool {
        let mut strict = false;
        for (m, n) in ms.iter().zip(ns) {
            if self.lt(m, n) {
                strict = true;
            } else if m != n {
                return false;
            }
        }
        strict
    }

    /// Chain of obligations leading to an elementary failure of s ≺ t.
    pub fn explain(&mut self, s: &Term, t: &Term) -> Vec<String> {
        let mut out = Vec::new();
        self.explain_into(s, t, &mut out);
        out
    }

    fn explain_into(&mut self, s: &Term, t: &Term, out: &mut Vec<String>) {
        let show = |x: &Term| self.sig.show(x);
        out.push(format!("{} < {}", show(s), show(t)));
        let (Term::App(g, ss), Term::App(f, ts)) = (s, t) else {
            out.push(match t {
                Term::Var(_) => "nothing is below a variable".to_string(),
                _ => format!("variable {} does not occur in {}", show(s), show(t)),
            });
            return;
        };
        let (sn, fname) = (self.sig.name(*g).to_string(), self.sig.name(*f).to_string());
        if self.prec.lt(*g, *f) || (self.prec.equiv(*g, *f) && ss.len() == ts.len()) {
            if let Some(si) = ss.iter().find(|si| !self.lt(si, t)) {
                return self.explain_into(si, t, out);
            }
            if self.prec.lt(*g, *f) {
                return;
            }
            for (m, n) in ss.iter().zip(ts) {
                if m != n && !self.lt(m, n) {
                    return self.explain_into(m, n, out);
                }
            }
            out.push("no argument strictly decreases".into());
        } else if self.prec.equiv(*g, *f) {
            out.push(format!("`{sn}` and `{fname}` are equivalent but have different arities"));
        } else {
            out.push(format!("`{sn}` is not below `{fname}` in the precedence"));
        }
    }
}

pub fn compare(sig: &Signature, prec: &Precedence, s: &Term, t: &Term) -> bool {
    Comparator::new(sig, prec).lt(s, t)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquationVerdict {
    pub index: usize,
    pub equation: String,
    pub decreasing: bool,
    pub failing_subgoal: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderingVerdict {
    pub mode: Mode,
    pub precedence: String,
    pub per_equation: Vec<EquationVerdict>,
    pub overall: bool,
}

pub fn check_program(program: &Program, prec: &Precedence, mode: Mode) -> Result<OrderingVerdict> {
    let sig = &program.signature;
    let attrs = prec.attributes(program);
    if !attrs.separating {
        return Err(Error::InvalidPrecedence("precedence is not separating".into()));
    }
    match mode {
        Mode::Ppo if !attrs.strict_ctors => {
            return Err(Error::InvalidPrecedence("PPO needs pairwise incomparable constructors".into()))
        }
        Mode::Eppo if !attrs.fair => {
            return Err(Error::InvalidPrecedence("EPPO needs a fair precedence".into()))
        }
        _ => {}
    }
    let mut cmp = Comparator::new(sig, prec);
    let mut per_equation = Vec::new();
    for e in &program.equations {
        let lhs = e.lhs();
        let decreasing = cmp.lt(&e.rhs, &lhs);
        let failing_subgoal = (!decreasing).then(|| Comparator::new(sig, prec).explain(&e.rhs, &lhs));
        per_equation.push(EquationVerdict {
            index: e.index,
            equation: program.show_equation(e),
            decreasing,
            failing_subgoal,
        });
    }
    let overall = per_equation.iter().all(|v| v.decreasing);
    Ok(OrderingVerdict {
        mode,
        precedence: prec.to_text(sig),
        per_equation,
        overall,
    })
}

/// Strongly connected components of the static call graph, indexed by symbol,
/// plus the edges f → g for each g occurring in an f-equation's rhs.
fn call_graph(program: &Program) -> (Vec<usize>, Vec<(SymId, SymId)>) {
    let sig = &program.signature;
    let mut g = DiGraph::<SymId, ()>::new();
    let nodes: Vec<_> = sig.ids().map(|s| g.add_node(s)).collect();
    let mut edges = Vec::new();
    for e in &program.equations {
        let mut syms = Vec::new();
        e.rhs.symbols(&mut syms);
        for s in syms.into_iter().filter(|&s| sig.is_function(s)) {
            if !edges.contains(&(e.function, s)) {
                edges.push((e.function, s));
                g.add_edge(nodes[e.function.0 as usize], nodes[s.0 as usize], ());
            }
        }
    }
    let mut comp = vec![0; sig.len()];
    for (i, scc) in tarjan_scc(&g).into_iter().enumerate() {
        for n in scc {
            comp[g[n].0 as usize] = i;
        }
    }
    (comp, edges)
}

/// Finest compatible separating precedence: classes are the call graph's SCCs.
pub fn canonical_precedence(program: &Program, mode: Mode) -> Precedence {
    let sig = &program.signature;
    let (comp, edges) = call_graph(program);
    let funs = sig.functions();
    let mut equiv = Vec::new();
    for (i, &a) in funs.iter().enumerate() {
        for &b in &funs[i + 1..] {
            if comp[a.0 as usize] == comp[b.0 as usize] {
                equiv.push((a, b));
            }
        }
    }
    let less: Vec<_> = edges
        .iter()
        .filter(|(f, g)| comp[f.0 as usize] != comp[g.0 as usize])
        .map(|&(f, g)| (g, f))
        .collect();
    Precedence::build(sig, &equiv, &less, mode).expect("call graph condensation is acyclic")
}

pub fn infer_precedence(program: &Program, mode: Mode) -> Option<Precedence> {
    let prec = canonical_precedence(program, mode);
    check_program(program, &prec, mode)
        .ok()
        .filter(|v| v.overall)
        .map(|_| prec)
}

/// Ranks under the canonical precedence.
pub fn function_ranks(program: &Program) -> Vec<usize> {
    canonical_precedence(program, Mode::Ppo).ranks(&program.signature)
}

/// Precedence from the program's `order:` annotation if present, else canonical.
pub fn program_precedence(program: &Program, mode: Mode) -> Result<Precedence> {
    match &program.annotations.order {
        Some(text) => Precedence::parse(&program.signature, text, mode),
        None => Ok(canonical_precedence(program, mode)),
    }
}
