//! Safe recursion function algebra over binary words: terms, an
//! s-expression format, compilation to constructor programs, the uniform
//! quasi-interpretation of compiled programs and a random term generator.
//!
//! S-expression forms (arities are written normal;safe):
//! `(zero)` 0;0, `(succ i)` 0;1, `(pred)` 0;1, `(cond)` 0;3,
//! `(proj n m j)` n;m, `(saferec g h0 h1)` 1+n;m for g of n;m,
//! `(comp n m g (h..) (l..))` n;m. `;` starts a comment.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qi::{QiAssignment, QiExpr};
use crate::term::{Equation, Program, Signature, SymId, SymbolKind, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BcTerm {
    Zero,
    Succ(u8),
    Proj { n: usize, m: usize, j: usize },
    Pred,
    Cond,
    SafeRec { g: Box<BcTerm>, h0: Box<BcTerm>, h1: Box<BcTerm> },
    SafeComp { n: usize, m: usize, g: Box<BcTerm>, hs: Vec<BcTerm>, ls: Vec<BcTerm> },
}

impl BcTerm {
    /// (normal, safe) arity after checking every sub-term.
    pub fn arity(&self) -> Result<(usize, usize)> {
        match self {
            BcTerm::Zero => Ok((0, 0)),
            BcTerm::Succ(i) if *i <= 1 => Ok((0, 1)),
            BcTerm::Succ(i) => Err(Error::BcArity(format!("successor index {i} is not 0 or 1"))),
            BcTerm::Pred => Ok((0, 1)),
            BcTerm::Cond => Ok((0, 3)),
            BcTerm::Proj { n, m, j } => {
                if *j == 0 || j > &(n + m) {
                    Err(Error::BcArity(format!("projection index {j} outside 1..{}", n + m)))
                } else {
                    Ok((*n, *m))
                }
            }
            BcTerm::SafeRec { g, h0, h1 } => {
                let (n, m) = g.arity()?;
                for h in [h0, h1] {
                    let a = h.arity()?;
                    if a != (n + 1, m + 1) {
                        return Err(Error::BcArity(format!(
                            "recursion step has arity {};{} but {};{} is required",
                            a.0,
                            a.1,
                            n + 1,
                            m + 1
                        )));
                    }
                }
                Ok((n + 1, m))
            }
            BcTerm::SafeComp { n, m, g, hs, ls } => {
                let (p, q) = g.arity()?;
                if (p, q) != (hs.len(), ls.len()) {
                    return Err(Error::BcArity(format!(
                        "composed function has arity {p};{q} but receives {};{} arguments",
                        hs.len(),
                        ls.len()
                    )));
                }
                for h in hs {
                    if h.arity()? != (*n, 0) {
                        return Err(Error::BcArity(format!("normal argument function must have arity {n};0")));
                    }
                }
                for l in ls {
                    if l.arity()? != (*n, *m) {
                        return Err(Error::BcArity(format!("safe argument function must have arity {n};{m}")));
                    }
                }
                Ok((*n, *m))
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            BcTerm::SafeRec { g, h0, h1 } => 1 + g.depth().max(h0.depth()).max(h1.depth()),
            BcTerm::SafeComp { g, hs, ls, .. } => {
                1 + hs.iter().chain(ls).map(|t| t.depth()).max().unwrap_or(0).max(g.depth())
            }
            _ => 0,
        }
    }

    pub fn to_sexpr(&self) -> String {
        match self {
            BcTerm::Zero => "(zero)".into(),
            BcTerm::Succ(i) => format!("(succ {i})"),
            BcTerm::Proj { n, m, j } => format!("(proj {n} {m} {j})"),
            BcTerm::Pred => "(pred)".into(),
            BcTerm::Cond => "(cond)".into(),
            BcTerm::SafeRec { g, h0, h1 } => format!("(saferec {} {} {})", g.to_sexpr(), h0.to_sexpr(), h1.to_sexpr()),
            BcTerm::SafeComp { n, m, g, hs, ls } => {
                let list = |v: &[BcTerm]| v.iter().map(|t| t.to_sexpr()).collect::<Vec<_>>().join(" ");
                format!("(comp {n} {m} {} ({}) ({}))", g.to_sexpr(), list(hs), list(ls))
            }
        }
    }
}

// ---------------------------------------------------------------- parsing

#[derive(Debug)]
enum Sexp {
    Atom(String, usize, usize),
    List(Vec<Sexp>, usize, usize),
}

fn tokenize(text: &str) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split(';').next().unwrap_or("");
        let mut cur = String::new();
        let mut start = 0;
        for (col, c) in line.chars().enumerate() {
            if c == '(' || c == ')' || c.is_whitespace() {
                if !cur.is_empty() {
                    out.push((std::mem::take(&mut cur), ln + 1, start + 1));
                }
                if !c.is_whitespace() {
                    out.push((c.to_string(), ln + 1, col + 1));
                }
            } else {
                if cur.is_empty() {
                    start = col;
                }
                cur.push(c);
            }
        }
        if !cur.is_empty() {
            out.push((cur, ln + 1, start + 1));
        }
    }
    out
}

fn read(tokens: &[(String, usize, usize)], pos: &mut usize) -> Result<Sexp> {
    let Some((tok, line, col)) = tokens.get(*pos) else {
        return Err(Error::Syntax {
            line: tokens.last().map(|t| t.1).unwrap_or(1),
            column: 1,
            message: "unexpected end of input".into(),
        });
    };
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    Some((t, _, _)) if t == ")" => {
                        *pos += 1;
                        return Ok(Sexp::List(items, *line, *col));
                    }
                    Some(_) => items.push(read(tokens, pos)?),
                    None => {
                        return Err(Error::Syntax {
                            line: *line,
                            column: *col,
                            message: "unclosed '('".into(),
                        })
                    }
                }
            }
        }
        ")" => Err(Error::Syntax {
            line: *line,
            column: *col,
            message: "unexpected ')'".into(),
        }),
        _ => Ok(Sexp::Atom(tok.clone(), *line, *col)),
    }
}

fn pos_of(s: &Sexp) -> (usize, usize) {
    match s {
        Sexp::Atom(_, l, c) | Sexp::List(_, l, c) => (*l, *c),
    }
}

fn syntax(s: &Sexp, msg: &str) -> Error {
    let (line, column) = pos_of(s);
    Error::Syntax {
        line,
        column,
        message: msg.to_string(),
    }
}

fn number(s: &Sexp) -> Result<usize> {
    match s {
        Sexp::Atom(a, _, _) => a.parse().map_err(|_| syntax(s, "expected a natural number")),
        _ => Err(syntax(s, "expected a natural number")),
    }
}

fn convert(s: &Sexp) -> Result<BcTerm> {
    let Sexp::List(items, _, _) = s else {
        return Err(syntax(s, "expected a parenthesised form"));
    };
    let Some(Sexp::Atom(head, _, _)) = items.first() else {
        return Err(syntax(s, "expected a form name"));
    };
    let args = &items[1..];
    let want = |k: usize| {
        if args.len() == k {
            Ok(())
        } else {
            Err(syntax(s, &format!("{head} takes {k} arguments")))
        }
    };
    let list = |x: &Sexp| -> Result<Vec<BcTerm>> {
        match x {
            Sexp::List(v, _, _) => v.iter().map(convert).collect(),
            _ => Err(syntax(x, "expected a list of terms")),
        }
    };
    let t = match head.as_str() {
        "zero" => {
            want(0)?;
            BcTerm::Zero
        }
        "succ" => {
            want(1)?;
            BcTerm::Succ(number(&args[0])?.min(255) as u8)
        }
        "pred" => {
            want(0)?;
            BcTerm::Pred
        }
        "cond" => {
            want(0)?;
            BcTerm::Cond
        }
        "proj" => {
            want(3)?;
            BcTerm::Proj {
                n: number(&args[0])?,
                m: number(&args[1])?,
                j: number(&args[2])?,
            }
        }
        "saferec" => {
            want(3)?;
            BcTerm::SafeRec {
                g: Box::new(convert(&args[0])?),
                h0: Box::new(convert(&args[1])?),
                h1: Box::new(convert(&args[2])?),
            }
        }
        "comp" => {
            want(5)?;
            BcTerm::SafeComp {
                n: number(&args[0])?,
                m: number(&args[1])?,
                g: Box::new(convert(&args[2])?),
                hs: list(&args[3])?,
                ls: list(&args[4])?,
            }
        }
        other => return Err(syntax(s, &format!("unknown form '{other}'"))),
    };
    t.arity()?;
    Ok(t)
}

pub fn parse_bc(text: &str) -> Result<BcTerm> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let s = read(&tokens, &mut pos)?;
    if let Some((_, line, column)) = tokens.get(pos) {
        return Err(Error::Syntax {
            line: *line,
            column: *column,
            message: "trailing input after the term".into(),
        });
    }
    convert(&s)
}

// ---------------------------------------------------------------- compilation

#[derive(Clone, Debug)]
pub struct BcSymbol {
    pub symbol: SymId,
    pub kind: &'static str,
    pub normal: usize,
    pub safe: usize,
    /// The sub-term this symbol implements.
    pub source: String,
    /// q over the normal arguments.
    pub q: QiExpr,
}

#[derive(Clone, Debug)]
pub struct BcCompilation {
    pub program: Program,
    pub qi: QiAssignment,
    pub provenance: Vec<BcSymbol>,
}

impl BcCompilation {
    /// Program text with provenance comments and the assignment as `qi` lines.
    pub fn to_text(&self) -> String {
        let sig = &self.program.signature;
        let mut s = String::new();
        for p in &self.provenance {
            let _ = writeln!(s, "# {} ({};{}) {}", sig.name(p.symbol), p.normal, p.safe, p.source);
        }
        s.push_str(&self.program.to_text());
        s.push_str(&self.qi.to_text(sig));
        s
    }
}

struct Compiler {
    sig: Signature,
    eqs: Vec<Equation>,
    qi: QiAssignment,
    provenance: Vec<BcSymbol>,
    counter: usize,
    s0: SymId,
    s1: SymId,
    zero: SymId,
}

fn var(prefix: &str, i: usize) -> Term {
    Term::var(&format!("{prefix}{i}"))
}

fn is_zero(e: &QiExpr) -> bool {
    matches!(e, QiExpr::Const(c) if c == &crate::qi::rat(0))
}

fn sum(xs: Vec<QiExpr>) -> QiExpr {
    let mut xs: Vec<QiExpr> = xs.into_iter().filter(|e| !is_zero(e)).collect();
    match xs.len() {
        0 => QiExpr::int(0),
        1 => xs.pop().unwrap(),
        _ => QiExpr::Sum(xs),
    }
}

fn max(mut xs: Vec<QiExpr>) -> QiExpr {
    if xs.len() == 1 {
        xs.pop().unwrap()
    } else {
        QiExpr::Max(xs)
    }
}

impl Compiler {
    fn fresh(&mut self, kind: &'static str, arity: usize) -> Result<SymId> {
        let name = format!("bc_{kind}_{}", self.counter);
        self.counter += 1;
        self.sig.add(&name, SymbolKind::Function, arity)
    }

    fn eq(&mut self, f: SymId, patterns: Vec<Term>, rhs: Term) {
        self.eqs.push(Equation {
            function: f,
            patterns,
            rhs,
            index: 0,
        });
    }

    /// ⌊f⌋ = q(normals) + max(safes).
    fn entry(&mut self, f: SymId, q: &QiExpr, n: usize, m: usize) -> Result<()> {
        let e = if m == 0 {
            q.clone()
        } else {
            sum(vec![q.clone(), max((n..n + m).map(QiExpr::Arg).collect())])
        };
        self.qi.set(&self.sig, f, e)
    }

    fn compile(&mut self, t: &BcTerm) -> Result<(SymId, QiExpr)> {
        let (n, m) = t.arity()?;
        let k = n + m;
        let (kind, f, q, entry) = match t {
            BcTerm::Zero => {
                let f = self.fresh("zero", 0)?;
                self.eq(f, vec![], Term::constant(self.zero));
                ("zero", f, QiExpr::int(1), None)
            }
            BcTerm::Succ(i) => {
                let f = self.fresh("succ", 1)?;
                let c = if *i == 0 { self.s0 } else { self.s1 };
                self.eq(f, vec![var("y", 1)], Term::App(c, vec![var("y", 1)]));
                ("succ", f, QiExpr::int(1), None)
            }
            BcTerm::Proj { j, .. } => {
                let f = self.fresh("proj", k)?;
                let args: Vec<Term> = (1..=k).map(|i| var("x", i)).collect();
                self.eq(f, args, var("x", *j));
                // q is a sum so that q stays a posynomial; ⌊π⌋ itself is the max
                let q = sum((0..n).map(QiExpr::Arg).collect());
                let e = max((0..k).map(QiExpr::Arg).collect());
                ("proj", f, q, Some(e))
            }
            BcTerm::Pred => {
                let f = self.fresh("pred", 1)?;
                let (z, s0, s1) = (self.zero, self.s0, self.s1);
                self.eq(f, vec![Term::constant(z)], Term::constant(z));
                self.eq(f, vec![Term::App(s0, vec![var("y", 1)])], var("y", 1));
                self.eq(f, vec![Term::App(s1, vec![var("y", 1)])], var("y", 1));
                ("pred", f, QiExpr::int(0), Some(QiExpr::Arg(0)))
            }
            BcTerm::Cond => {
                let f = self.fresh("cond", 3)?;
                let (z, s0, s1) = (self.zero, self.s0, self.s1);
                let (x, y) = (var("y", 2), var("y", 3));
                self.eq(f, vec![Term::constant(z), x.clone(), y.clone()], x.clone());
                self.eq(f, vec![Term::App(s0, vec![var("y", 1)]), x.clone(), y.clone()], x.clone());
                self.eq(f, vec![Term::App(s1, vec![var("y", 1)]), x.clone(), y.clone()], y.clone());
                let e = QiExpr::Max(vec![QiExpr::Arg(0), QiExpr::Arg(1), QiExpr::Arg(2)]);
                ("cond", f, QiExpr::int(0), Some(e))
            }
            BcTerm::SafeRec { g, h0, h1 } => {
                let (g, qg) = self.compile(g)?;
                let (h0, qh0) = self.compile(h0)?;
                let (h1, qh1) = self.compile(h1)?;
                let f = self.fresh("rec", k)?;
                let xs: Vec<Term> = (1..n).map(|i| var("x", i)).collect();
                let ys: Vec<Term> = (1..=m).map(|i| var("y", i)).collect();
                let z = Term::var("z");
                let mut base = vec![Term::constant(self.zero)];
                base.extend(xs.iter().cloned());
                base.extend(ys.iter().cloned());
                let mut gargs = xs.clone();
                gargs.extend(ys.iter().cloned());
                self.eq(f, base, Term::App(g, gargs));
                let mut rec_args = vec![z.clone()];
                rec_args.extend(xs.iter().cloned());
                rec_args.extend(ys.iter().cloned());
                let rec_call = Term::App(f, rec_args.clone());
                for (c, h) in [(self.s0, h0), (self.s1, h1)] {
                    let mut pats = vec![Term::App(c, vec![z.clone()])];
                    pats.extend(xs.iter().cloned());
                    pats.extend(ys.iter().cloned());
                    let mut hargs = rec_args.clone();
                    hargs.push(rec_call.clone());
                    self.eq(f, pats, Term::App(h, hargs));
                }
                // A·(q_h0 + q_h1) + q_g(X) + A + ΣX
                let a = QiExpr::Arg(0);
                let xs_q: Vec<QiExpr> = (1..n).map(QiExpr::Arg).collect();
                let mut parts = vec![
                    QiExpr::Prod(vec![a.clone(), sum(vec![qh0, qh1])]),
                    qg.subst(&xs_q),
                    a,
                ];
                parts.extend(xs_q);
                ("rec", f, sum(parts), None)
            }
            BcTerm::SafeComp { g, hs, ls, .. } => {
                let (g, qg) = self.compile(g)?;
                let mut hsyms = Vec::new();
                for h in hs {
                    hsyms.push(self.compile(h)?);
                }
                let mut lsyms = Vec::new();
                for l in ls {
                    lsyms.push(self.compile(l)?);
                }
                let f = self.fresh("comp", k)?;
                let xs: Vec<Term> = (1..=n).map(|i| var("x", i)).collect();
                let ys: Vec<Term> = (1..=m).map(|i| var("y", i)).collect();
                let mut all = xs.clone();
                all.extend(ys.iter().cloned());
                let mut gargs: Vec<Term> = hsyms.iter().map(|(h, _)| Term::App(*h, xs.clone())).collect();
                gargs.extend(lsyms.iter().map(|(l, _)| Term::App(*l, all.clone())));
                self.eq(f, all, Term::App(g, gargs));
                // q_g(q_h1..q_hp) + Σ q_l + ΣX
                let hq: Vec<QiExpr> = hsyms.iter().map(|(_, q)| q.clone()).collect();
                let mut parts = vec![qg.subst(&hq)];
                parts.extend(lsyms.into_iter().map(|(_, q)| q));
                parts.extend((0..n).map(QiExpr::Arg));
                ("comp", f, sum(parts), None)
            }
        };
        match entry {
            Some(e) => self.qi.set(&self.sig, f, e)?,
            None => self.entry(f, &q, n, m)?,
        }
        self.provenance.push(BcSymbol {
            symbol: f,
            kind,
            normal: n,
            safe: m,
            source: t.to_sexpr(),
            q: q.clone(),
        });
        Ok((f, q))
    }
}

pub fn compile(bc: &BcTerm) -> Result<BcCompilation> {
    bc.arity()?;
    let mut sig = Signature::new();
    let s0 = sig.add("s0", SymbolKind::Constructor, 1)?;
    let s1 = sig.add("s1", SymbolKind::Constructor, 1)?;
    let zero = sig.add("0", SymbolKind::Constructor, 0)?;
    let mut c = Compiler {
        sig,
        eqs: Vec::new(),
        qi: QiAssignment::new(),
        provenance: Vec::new(),
        counter: 0,
        s0,
        s1,
        zero,
    };
    let one = QiExpr::int(1);
    let x_plus_1 = QiExpr::Sum(vec![QiExpr::Arg(0), QiExpr::int(1)]);
    c.qi.set(&c.sig, s0, x_plus_1.clone())?;
    c.qi.set(&c.sig, s1, x_plus_1)?;
    c.qi.set(&c.sig, zero, one)?;
    let (main, _) = c.compile(bc)?;
    let program = Program::new(c.sig, c.eqs, main)?;
    Ok(BcCompilation {
        program,
        qi: c.qi,
        provenance: c.provenance,
    })
}

/// The assignment of the compiled program.
pub fn auto_qi(bc: &BcTerm) -> Result<QiAssignment> {
    Ok(compile(bc)?.qi)
}

// ---------------------------------------------------------------- generation

/// Probability of stopping at an initial function before the depth cap.
const LEAF_PROBABILITY: f64 = 0.4;

fn leaf(rng: &mut ChaCha8Rng, n: usize, m: usize) -> BcTerm {
    let mut options = Vec::new();
    if n + m >= 1 {
        options.push(BcTerm::Proj {
            n,
            m,
            j: rng.random_range(1..=n + m),
        });
    }
    match (n, m) {
        (0, 0) => options.push(BcTerm::Zero),
        (0, 1) => {
            options.push(BcTerm::Pred);
            options.push(BcTerm::Succ(rng.random_range(0..=1)));
        }
        (0, 3) => options.push(BcTerm::Cond),
        _ => {}
    }
    let k = rng.random_range(0..options.len());
    options.swap_remove(k)
}

fn gen(rng: &mut ChaCha8Rng, n: usize, m: usize, depth: usize) -> BcTerm {
    if depth == 0 || rng.random_bool(LEAF_PROBABILITY) {
        return leaf(rng, n, m);
    }
    if n >= 1 && rng.random_bool(0.5) {
        return BcTerm::SafeRec {
            g: Box::new(gen(rng, n - 1, m, depth - 1)),
            h0: Box::new(gen(rng, n, m + 1, depth - 1)),
            h1: Box::new(gen(rng, n, m + 1, depth - 1)),
        };
    }
    let p = rng.random_range(0..=2);
    let q = if p == 0 && rng.random_bool(0.5) { 3 } else { rng.random_range(0..=2) };
    BcTerm::SafeComp {
        n,
        m,
        g: Box::new(gen(rng, p, q, depth - 1)),
        hs: (0..p).map(|_| gen(rng, n, 0, depth - 1)).collect(),
        ls: (0..q).map(|_| gen(rng, n, m, depth - 1)).collect(),
    }
}

/// Arity-consistent random term of depth at most `depth_cap`, reproducible by seed.
pub fn random_bc(seed: u64, depth_cap: usize) -> BcTerm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(0..=2);
    let m = rng.random_range(0..=2);
    gen(&mut rng, n, m, depth_cap)
}
