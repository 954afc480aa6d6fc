//! Max-plus polynomial assignments over non-negative rationals: parsing,
//! exact evaluation, the assignment conditions, equation checking by
//! posynomial dominance with sampling refutation, uniformity and meet.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::term::{Program, Signature, SymId, SymbolKind, Term};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QiExpr {
    Const(Rat),
    Arg(usize),
    Sum(Vec<QiExpr>),
    Prod(Vec<QiExpr>),
    Max(Vec<QiExpr>),
    Min(Vec<QiExpr>),
}

impl QiExpr {
    pub fn int(n: i64) -> QiExpr {
        QiExpr::Const(rat(n))
    }

    pub fn eval(&self, point: &[Rat]) -> Rat {
        match self {
            QiExpr::Const(c) => c.clone(),
            QiExpr::Arg(i) => point[*i].clone(),
            QiExpr::Sum(xs) => xs.iter().map(|x| x.eval(point)).fold(Rat::zero(), |a, b| a + b),
            QiExpr::Prod(xs) => xs.iter().map(|x| x.eval(point)).fold(Rat::one(), |a, b| a * b),
            QiExpr::Max(xs) => xs.iter().map(|x| x.eval(point)).max().unwrap_or_else(Rat::zero),
            QiExpr::Min(xs) => xs.iter().map(|x| x.eval(point)).min().unwrap_or_else(Rat::zero),
        }
    }

    /// Replaces `Arg(i)` by `args[i]`.
    pub fn subst(&self, args: &[QiExpr]) -> QiExpr {
        match self {
            QiExpr::Const(c) => QiExpr::Const(c.clone()),
            QiExpr::Arg(i) => args[*i].clone(),
            QiExpr::Sum(xs) => QiExpr::Sum(xs.iter().map(|x| x.subst(args)).collect()),
            QiExpr::Prod(xs) => QiExpr::Prod(xs.iter().map(|x| x.subst(args)).collect()),
            QiExpr::Max(xs) => QiExpr::Max(xs.iter().map(|x| x.subst(args)).collect()),
            QiExpr::Min(xs) => QiExpr::Min(xs.iter().map(|x| x.subst(args)).collect()),
        }
    }

    /// One more than the largest argument index used.
    pub fn arity_used(&self) -> usize {
        match self {
            QiExpr::Const(_) => 0,
            QiExpr::Arg(i) => i + 1,
            QiExpr::Sum(xs) | QiExpr::Prod(xs) | QiExpr::Max(xs) | QiExpr::Min(xs) => {
                xs.iter().map(|x| x.arity_used()).max().unwrap_or(0)
            }
        }
    }

    pub fn has_min(&self) -> bool {
        match self {
            QiExpr::Min(_) => true,
            QiExpr::Const(_) | QiExpr::Arg(_) => false,
            QiExpr::Sum(xs) | QiExpr::Prod(xs) | QiExpr::Max(xs) => xs.iter().any(|x| x.has_min()),
        }
    }

    pub fn show(&self, names: &[String]) -> String {
        let mut s = String::new();
        self.write(names, 0, &mut s);
        s
    }

    fn write(&self, names: &[String], ctx: u8, out: &mut String) {
        match self {
            QiExpr::Const(c) => out.push_str(&show_rat(c)),
            QiExpr::Arg(i) => out.push_str(names.get(*i).map(|s| s.as_str()).unwrap_or("?")),
            QiExpr::Sum(xs) if xs.is_empty() => out.push('0'),
            QiExpr::Prod(xs) if xs.is_empty() => out.push('1'),
            QiExpr::Sum(xs) => {
                if ctx > 0 {
                    out.push('(');
                }
                for (k, x) in xs.iter().enumerate() {
                    if k > 0 {
                        out.push_str(" + ");
                    }
                    x.write(names, 1, out);
                }
                if ctx > 0 {
                    out.push(')');
                }
            }
            QiExpr::Prod(xs) => {
                if ctx > 1 {
                    out.push('(');
                }
                for (k, x) in xs.iter().enumerate() {
                    if k > 0 {
                        out.push('*');
                    }
                    x.write(names, 2, out);
                }
                if ctx > 1 {
                    out.push(')');
                }
            }
            QiExpr::Max(xs) | QiExpr::Min(xs) => {
                out.push_str(if matches!(self, QiExpr::Max(_)) { "max(" } else { "min(" });
                for (k, x) in xs.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    x.write(names, 0, out);
                }
                out.push(')');
            }
        }
    }
}

pub fn show_rat(c: &Rat) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Default argument names: X, Y, Z up to three arguments, X1.. beyond.
pub fn default_names(n: usize) -> Vec<String> {
    if n <= 3 {
        ["X", "Y", "Z"][..n].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=n).map(|i| format!("X{i}")).collect()
    }
}

// ---------------------------------------------------------------- parsing

struct ExprParser<'a> {
    chars: Vec<char>,
    pos: usize,
    names: &'a [String],
}

impl ExprParser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax {
            line: 0,
            column: self.pos + 1,
            message: msg.to_string(),
        }
    }

    fn ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<QiExpr> {
        let mut xs = vec![self.prod()?];
        while self.eat('+') {
            xs.push(self.prod()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { QiExpr::Sum(xs) })
    }

    fn prod(&mut self) -> Result<QiExpr> {
        let mut xs = vec![self.power()?];
        while self.eat('*') {
            xs.push(self.power()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { QiExpr::Prod(xs) })
    }

    fn power(&mut self) -> Result<QiExpr> {
        let base = self.atom()?;
        if self.eat('^') {
            self.ws();
            let k = self.integer()?;
            let k = k.to_usize().filter(|&k| k <= 64).ok_or_else(|| self.err("exponent out of range"))?;
            return Ok(match k {
                0 => QiExpr::int(1),
                1 => base,
                _ => QiExpr::Prod(vec![base; k]),
            });
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt> {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a number"));
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        Ok(s.parse().expect("digits"))
    }

    fn atom(&mut self) -> Result<QiExpr> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                if self.chars.get(self.pos) == Some(&'/') {
                    self.pos += 1;
                    let d = self.integer()?;
                    if d.is_zero() {
                        return Err(self.err("zero denominator"));
                    }
                    return Ok(QiExpr::Const(Rat::new(n, d)));
                }
                Ok(QiExpr::Const(Rat::from_integer(n)))
            }
            Some('(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.pos < self.chars.len()
                    && (self.chars[self.pos].is_alphanumeric() || self.chars[self.pos] == '_' || self.chars[self.pos] == '\'')
                {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                if (word == "max" || word == "min") && self.peek() == Some('(') {
                    self.pos += 1;
                    let mut xs = vec![self.sum()?];
                    while self.eat(',') {
                        xs.push(self.sum()?);
                    }
                    if !self.eat(')') {
                        return Err(self.err("expected ')'"));
                    }
                    return Ok(if word == "max" { QiExpr::Max(xs) } else { QiExpr::Min(xs) });
                }
                match self.names.iter().position(|n| *n == word) {
                    Some(i) => Ok(QiExpr::Arg(i)),
                    None => Err(self.err(&format!("unknown argument '{word}'"))),
                }
            }
            _ => Err(self.err("expected an expression")),
        }
    }
}

/// Parses an expression over the given argument names.
pub fn parse_expr(text: &str, names: &[String]) -> Result<QiExpr> {
    let mut p = ExprParser {
        chars: text.chars().collect(),
        pos: 0,
        names,
    };
    let e = p.sum()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

// ---------------------------------------------------------------- assignments

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QiEntry {
    pub arity: usize,
    pub expr: QiExpr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QiAssignment {
    pub entries: BTreeMap<SymId, QiEntry>,
}

impl QiAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, sig: &Signature, f: SymId, expr: QiExpr) -> Result<()> {
        let arity = sig.arity(f);
        if expr.arity_used() > arity {
            return Err(Error::InvalidAssignment(format!(
                "entry for {} uses argument {} but the symbol has arity {arity}",
                sig.name(f),
                expr.arity_used()
            )));
        }
        self.entries.insert(f, QiEntry { arity, expr });
        Ok(())
    }

    pub fn get(&self, f: SymId) -> Option<&QiExpr> {
        self.entries.get(&f).map(|e| &e.expr)
    }

    /// Parses `qi name(X,Y) = expr` lines; blank and `#` lines are skipped.
    pub fn parse(sig: &Signature, text: &str) -> Result<QiAssignment> {
        let mut a = QiAssignment::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            a.parse_line(sig, line).map_err(|e| match e {
                Error::Syntax { column, message, .. } => Error::Syntax {
                    line: ln + 1,
                    column,
                    message,
                },
                other => other,
            })?;
        }
        Ok(a)
    }

    fn parse_line(&mut self, sig: &Signature, line: &str) -> Result<()> {
        let body = line.strip_prefix("qi").filter(|r| r.starts_with(char::is_whitespace)).ok_or_else(|| Error::Syntax {
            line: 0,
            column: 1,
            message: "expected 'qi'".into(),
        })?;
        let (head, expr) = body.split_once('=').ok_or_else(|| Error::Syntax {
            line: 0,
            column: 1,
            message: "expected '='".into(),
        })?;
        let head = head.trim();
        let (name, names) = match head.split_once('(') {
            Some((n, rest)) => {
                let inner = rest.trim().strip_suffix(')').ok_or_else(|| Error::Syntax {
                    line: 0,
                    column: 1,
                    message: "expected ')' in qi header".into(),
                })?;
                let names: Vec<String> = inner
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                (n.trim(), names)
            }
            None => (head, Vec::new()),
        };
        let f = sig.lookup(name).ok_or_else(|| Error::UndeclaredSymbol(name.to_string()))?;
        if names.len() != sig.arity(f) {
            return Err(Error::ArityMismatch {
                symbol: name.to_string(),
                expected: sig.arity(f),
                found: names.len(),
            });
        }
        let e = parse_expr(expr.trim(), &names)?;
        self.set(sig, f, e)
    }

    /// Assignment from the `qi` annotation lines of a program.
    pub fn from_program(program: &Program) -> Result<Option<QiAssignment>> {
        if program.annotations.qi.is_empty() {
            return Ok(None);
        }
        let text = program.annotations.qi.join("\n");
        Ok(Some(QiAssignment::parse(&program.signature, &text)?))
    }

    pub fn to_text(&self, sig: &Signature) -> String {
        let mut out = String::new();
        for (f, e) in &self.entries {
            let names = default_names(e.arity);
            if e.arity == 0 {
                let _ = writeln!(out, "qi {} = {}", sig.name(*f), e.expr.show(&names));
            } else {
                let _ = writeln!(out, "qi {}({}) = {}", sig.name(*f), names.join(","), e.expr.show(&names));
            }
        }
        out
    }

    /// Maps every entry through a symbol map, keeping the first entry for
    /// symbols hit twice.
    pub fn rename(&self, map: &dyn Fn(SymId) -> SymId) -> QiAssignment {
        let mut out = QiAssignment::new();
        for (f, e) in &self.entries {
            out.entries.entry(map(*f)).or_insert_with(|| e.clone());
        }
        out
    }
}

/// Canonical extension to terms. Variables become `Arg(k)` where k is the
/// position of the variable in `vars`. Missing entries are reported.
pub fn term_qi(assignment: &QiAssignment, sig: &Signature, term: &Term, vars: &[String]) -> Result<QiExpr> {
    match term {
        Term::Var(x) => vars
            .iter()
            .position(|v| v == x)
            .map(QiExpr::Arg)
            .ok_or_else(|| Error::UnboundVariable(x.clone())),
        Term::App(f, args) => {
            let e = assignment.get(*f).ok_or_else(|| {
                Error::InvalidAssignment(format!("no entry for symbol {}", sig.name(*f)))
            })?;
            let sub = args
                .iter()
                .map(|a| term_qi(assignment, sig, a, vars))
                .collect::<Result<Vec<_>>>()?;
            Ok(e.subst(&sub))
        }
    }
}

/// Exact interpretation of a ground term.
pub fn ground_qi(assignment: &QiAssignment, sig: &Signature, term: &Term) -> Result<Rat> {
    match term {
        Term::Var(x) => Err(Error::UnboundVariable(x.clone())),
        Term::App(f, args) => {
            let e = assignment.get(*f).ok_or_else(|| {
                Error::InvalidAssignment(format!("no entry for symbol {}", sig.name(*f)))
            })?;
            let point = args
                .iter()
                .map(|a| ground_qi(assignment, sig, a))
                .collect::<Result<Vec<_>>>()?;
            Ok(e.eval(&point))
        }
    }
}

// ---------------------------------------------------------------- normal forms

/// Posynomial: exponent vector to positive coefficient.
pub type Poly = BTreeMap<Vec<u32>, Rat>;

/// Minimum over groups of the maximum over posynomials of each group.
pub type NormalForm = Vec<Vec<Poly>>;

/// Size caps beyond which normalization gives up.
pub const MAX_POLYS: usize = 4096;
pub const MAX_GROUPS: usize = 256;

fn poly_const(n: usize, c: &Rat) -> Poly {
    let mut p = Poly::new();
    if !c.is_zero() {
        p.insert(vec![0; n], c.clone());
    }
    p
}

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = a.clone();
    for (m, c) in b {
        *out.entry(m.clone()).or_insert_with(Rat::zero) += c;
    }
    out
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (m1, c1) in a {
        for (m2, c2) in b {
            let m: Vec<u32> = m1.iter().zip(m2).map(|(x, y)| x + y).collect();
            *out.entry(m).or_insert_with(Rat::zero) += c1 * c2;
        }
    }
    out
}

/// Coefficient-wise `p ≥ q`, sufficient for `p(X) ≥ q(X)` on non-negative points.
pub fn poly_dominates(p: &Poly, q: &Poly) -> bool {
    q.iter().all(|(m, c)| p.get(m).is_some_and(|d| d >= c))
}

fn simplify_group(g: Vec<Poly>) -> Vec<Poly> {
    let mut g = g;
    g.sort();
    g.dedup();
    let mut keep: Vec<Poly> = Vec::new();
    for (i, p) in g.iter().enumerate() {
        let dominated = g
            .iter()
            .enumerate()
            .any(|(j, q)| j != i && poly_dominates(q, p) && (q != p || j < i));
        if !dominated {
            keep.push(p.clone());
        }
    }
    keep
}

fn finish(nf: NormalForm) -> Option<NormalForm> {
    let mut out: NormalForm = nf.into_iter().map(simplify_group).collect();
    out.sort();
    out.dedup();
    if out.len() > MAX_GROUPS || out.iter().map(|g| g.len()).sum::<usize>() > MAX_POLYS {
        return None;
    }
    Some(out)
}

/// Combines two normal forms through `op` on each pair of posynomials.
fn combine(a: &NormalForm, b: &NormalForm, op: fn(&Poly, &Poly) -> Poly) -> Option<NormalForm> {
    let mut out = Vec::new();
    for ga in a {
        for gb in b {
            if ga.len() * gb.len() > MAX_POLYS {
                return None;
            }
            let mut g = Vec::with_capacity(ga.len() * gb.len());
            for p in ga {
                for q in gb {
                    g.push(op(p, q));
                }
            }
            out.push(g);
            if out.len() > MAX_GROUPS {
                return None;
            }
        }
    }
    finish(out)
}

/// Normal form over `n` variables, or `None` if it exceeds the size caps.
pub fn normal_form(e: &QiExpr, n: usize) -> Option<NormalForm> {
    match e {
        QiExpr::Const(c) => Some(vec![vec![poly_const(n, c)]]),
        QiExpr::Arg(i) => {
            let mut m = vec![0; n];
            m[*i] = 1;
            Some(vec![vec![Poly::from([(m, Rat::one())])]])
        }
        QiExpr::Sum(xs) => {
            let mut acc = vec![vec![Poly::new()]];
            for x in xs {
                acc = combine(&acc, &normal_form(x, n)?, poly_add)?;
            }
            Some(acc)
        }
        QiExpr::Prod(xs) => {
            let mut acc = vec![vec![poly_const(n, &Rat::one())]];
            for x in xs {
                acc = combine(&acc, &normal_form(x, n)?, poly_mul)?;
            }
            Some(acc)
        }
        QiExpr::Max(xs) => {
            // max of minima distributes into a minimum of maxima
            let mut acc: NormalForm = vec![vec![Poly::new()]];
            for x in xs {
                let nx = normal_form(x, n)?;
                let mut next = Vec::new();
                for ga in &acc {
                    for gb in &nx {
                        let mut g = ga.clone();
                        g.extend(gb.iter().cloned());
                        next.push(g);
                        if next.len() > MAX_GROUPS {
                            return None;
                        }
                    }
                }
                acc = finish(next)?;
            }
            Some(acc)
        }
        QiExpr::Min(xs) => {
            let mut acc = Vec::new();
            for x in xs {
                acc.extend(normal_form(x, n)?);
            }
            finish(acc)
        }
    }
}

/// Sufficient check of `lhs ≥ rhs`: every lhs group dominates some rhs
/// group, where a group dominates another when each posynomial of the
/// second is coefficient-wise below some posynomial of the first.
pub fn nf_dominates(lhs: &NormalForm, rhs: &NormalForm) -> bool {
    lhs.iter().all(|gl| {
        rhs.iter()
            .any(|gr| gr.iter().all(|q| gl.iter().any(|p| poly_dominates(p, q))))
    })
}

// ---------------------------------------------------------------- obligations

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Valid,
    Invalid { witness: Vec<Rat>, lhs: Rat, rhs: Rat },
    Unknown(String),
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Valid => "Valid",
            Status::Invalid { .. } => "Invalid",
            Status::Unknown(_) => "Unknown",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Status::Valid => json!({"status": "Valid"}),
            Status::Invalid { witness, lhs, rhs } => json!({
                "status": "Invalid",
                "witness": witness.iter().map(show_rat).collect::<Vec<_>>(),
                "lhs_value": show_rat(lhs),
                "rhs_value": show_rat(rhs),
            }),
            Status::Unknown(r) => json!({"status": "Unknown", "reason": r}),
        }
    }
}

/// Three-valued combination: Invalid wins, then Unknown.
pub fn combine_status<'a>(it: impl IntoIterator<Item = &'a Status>) -> Status {
    let mut unknown = None;
    for s in it {
        match s {
            Status::Invalid { .. } => return s.clone(),
            Status::Unknown(r) if unknown.is_none() => unknown = Some(r.clone()),
            _ => {}
        }
    }
    unknown.map(Status::Unknown).unwrap_or(Status::Valid)
}

pub const GRID: [i64; 5] = [0, 1, 2, 5, 10];
pub const RANDOM_POINTS: usize = 256;
/// Grid points checked in lexicographic order; beyond this, seeded grid draws.
pub const MAX_GRID_POINTS: usize = 3125;

/// Sample points for an obligation over `n` variables: the grid first, then
/// seeded random rationals. The sequence depends only on (seed, index).
pub fn sample_points(n: usize, seed: u64, index: u64) -> Vec<Vec<Rat>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x2545_f491_4f6c_dd1d));
    let mut pts = Vec::new();
    let total = GRID.len().checked_pow(n as u32).unwrap_or(usize::MAX);
    if total <= MAX_GRID_POINTS {
        for k in 0..total {
            let mut p = vec![Rat::zero(); n];
            let mut r = k;
            for i in (0..n).rev() {
                p[i] = rat(GRID[r % GRID.len()]);
                r /= GRID.len();
            }
            pts.push(p);
        }
    } else {
        for _ in 0..MAX_GRID_POINTS {
            pts.push((0..n).map(|_| rat(GRID[rng.random_range(0..GRID.len())])).collect());
        }
    }
    for _ in 0..RANDOM_POINTS {
        pts.push(
            (0..n)
                .map(|_| {
                    let scale = [1i64, 10, 100][rng.random_range(0..3)];
                    let num = rng.random_range(0..=100 * scale);
                    let den = rng.random_range(1..=16i64);
                    Rat::new(BigInt::from(num), BigInt::from(den))
                })
                .collect(),
        );
    }
    pts
}

/// Upper bound of `e` obtained by replacing every max below a product by the
/// sum of its arguments, which is sound over non-negative points and keeps
/// the normal form from multiplying out.
pub fn relax_max_under_products(e: &QiExpr, under_product: bool) -> QiExpr {
    let map = |xs: &[QiExpr], u: bool| xs.iter().map(|x| relax_max_under_products(x, u)).collect();
    match e {
        QiExpr::Const(_) | QiExpr::Arg(_) => e.clone(),
        QiExpr::Sum(xs) => QiExpr::Sum(map(xs, under_product)),
        QiExpr::Prod(xs) => QiExpr::Prod(map(xs, true)),
        QiExpr::Max(xs) if under_product => QiExpr::Sum(map(xs, true)),
        QiExpr::Max(xs) => QiExpr::Max(map(xs, false)),
        QiExpr::Min(xs) => QiExpr::Min(map(xs, under_product)),
    }
}

/// Checks `lhs ≥ rhs` over non-negative points.
pub fn check_obligation(lhs: &QiExpr, rhs: &QiExpr, n: usize, seed: u64, index: u64) -> Status {
    let nl = normal_form(lhs, n);
    let nr = normal_form(rhs, n);
    if let (Some(a), Some(b)) = (&nl, &nr) {
        if nf_dominates(a, b) {
            return Status::Valid;
        }
    }
    if let (Some(a), None) = (&nl, &nr) {
        if let Some(b) = normal_form(&relax_max_under_products(rhs, false), n) {
            if nf_dominates(a, &b) {
                return Status::Valid;
            }
        }
    }
    for p in sample_points(n, seed, index) {
        let l = lhs.eval(&p);
        let r = rhs.eval(&p);
        if l < r {
            return Status::Invalid {
                witness: p,
                lhs: l,
                rhs: r,
            };
        }
    }
    if nl.is_none() || nr.is_none() {
        Status::Unknown("normal form exceeds size caps; no sampled counterexample".into())
    } else {
        Status::Unknown("no coefficient dominance; no sampled counterexample".into())
    }
}

// ---------------------------------------------------------------- conditions

#[derive(Clone, Debug)]
pub struct SubtermCheck {
    pub symbol: String,
    pub arg: usize,
    pub status: Status,
}

#[derive(Clone, Debug)]
pub struct ConditionReport {
    /// Holds for every expression of the grammar.
    pub monotone: bool,
    /// Holds for every expression of the grammar.
    pub polynomial: bool,
    pub additivity: Vec<(String, bool)>,
    pub subterm: Vec<SubtermCheck>,
    pub missing: Vec<String>,
    pub overall: Status,
}

impl ConditionReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "monotone": self.monotone,
            "polynomial": self.polynomial,
            "additivity": self.additivity.iter().map(|(s, ok)| json!({"symbol": s, "holds": ok})).collect::<Vec<_>>(),
            "subterm": self.subterm.iter().map(|c| {
                let mut v = c.status.to_json();
                v["symbol"] = json!(c.symbol);
                v["arg"] = json!(c.arg + 1);
                v
            }).collect::<Vec<_>>(),
            "missing": self.missing,
            "overall": self.overall.to_json(),
        })
    }
}

/// The additive constant `a` when the normal form is exactly `ΣX_i + a` with `a ≥ 1`.
pub fn constructor_constant(e: &QiExpr, arity: usize) -> Option<Rat> {
    let nf = normal_form(e, arity)?;
    let [g] = nf.as_slice() else { return None };
    let [p] = g.as_slice() else { return None };
    let mut a = Rat::zero();
    let mut linear = 0;
    for (m, c) in p {
        let deg: u32 = m.iter().sum();
        match deg {
            0 => a = c.clone(),
            1 if c.is_one() => linear += 1,
            _ => return None,
        }
    }
    (linear == arity && a >= Rat::one()).then_some(a)
}

/// Largest constructor constant; the factor in `|v| ≤ ⌊v⌋ ≤ a·|v|`.
pub fn max_constructor_constant(assignment: &QiAssignment, sig: &Signature) -> Option<Rat> {
    sig.constructors()
        .into_iter()
        .map(|c| assignment.get(c).and_then(|e| constructor_constant(e, sig.arity(c))))
        .collect::<Option<Vec<_>>>()
        .map(|v| v.into_iter().max().unwrap_or_else(Rat::one))
}

pub fn check_conditions(assignment: &QiAssignment, sig: &Signature, seed: u64) -> ConditionReport {
    let mut additivity = Vec::new();
    let mut subterm = Vec::new();
    let mut missing = Vec::new();
    let mut idx = 1_000_000u64;
    for f in sig.ids() {
        let name = sig.name(f).to_string();
        let Some(e) = assignment.get(f) else {
            missing.push(name);
            continue;
        };
        let n = sig.arity(f);
        if sig.is_constructor(f) {
            additivity.push((name, constructor_constant(e, n).is_some()));
            continue;
        }
        for i in 0..n {
            idx += 1;
            subterm.push(SubtermCheck {
                symbol: name.clone(),
                arg: i,
                status: check_obligation(e, &QiExpr::Arg(i), n, seed, idx),
            });
        }
    }
    let mut statuses: Vec<Status> = subterm.iter().map(|c| c.status.clone()).collect();
    if !missing.is_empty() {
        statuses.push(Status::Unknown(format!("no entry for {}", missing.join(", "))));
    }
    let overall = if additivity.iter().any(|(_, ok)| !ok) {
        Status::Unknown("a constructor entry is not of the form sum of arguments plus a constant ≥ 1".into())
    } else {
        combine_status(&statuses)
    };
    ConditionReport {
        monotone: true,
        polynomial: true,
        additivity,
        subterm,
        missing,
        overall,
    }
}

// ---------------------------------------------------------------- program check

#[derive(Clone, Debug)]
pub struct EquationQi {
    pub index: usize,
    pub equation: String,
    pub vars: Vec<String>,
    pub lhs: Option<QiExpr>,
    pub rhs: Option<QiExpr>,
    pub status: Status,
}

#[derive(Clone, Debug)]
pub struct QiVerdict {
    pub per_equation: Vec<EquationQi>,
    pub conditions: ConditionReport,
    pub overall: Status,
}

impl QiVerdict {
    pub fn is_valid(&self) -> bool {
        self.overall == Status::Valid
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "per_equation": self.per_equation.iter().map(|e| {
                let mut v = e.status.to_json();
                v["index"] = json!(e.index);
                v["equation"] = json!(e.equation);
                v["variables"] = json!(e.vars);
                v["lhs"] = json!(e.lhs.as_ref().map(|x| x.show(&e.vars)));
                v["rhs"] = json!(e.rhs.as_ref().map(|x| x.show(&e.vars)));
                v
            }).collect::<Vec<_>>(),
            "conditions": self.conditions.to_json(),
            "overall": self.overall.name(),
        })
    }
}

pub const DEFAULT_SEED: u64 = 0x5eed;

pub fn check_qi(program: &Program, assignment: &QiAssignment, seed: u64) -> QiVerdict {
    let sig = &program.signature;
    let conditions = check_conditions(assignment, sig, seed);
    let mut per_equation = Vec::new();
    for e in &program.equations {
        let vars = e.lhs_vars();
        let lhs = term_qi(assignment, sig, &e.lhs(), &vars);
        let rhs = term_qi(assignment, sig, &e.rhs, &vars);
        let status = match (&lhs, &rhs) {
            (Ok(l), Ok(r)) => check_obligation(l, r, vars.len(), seed, e.index as u64),
            (Err(err), _) | (_, Err(err)) => Status::Unknown(err.to_string()),
        };
        per_equation.push(EquationQi {
            index: e.index,
            equation: program.show_equation(e),
            vars,
            lhs: lhs.ok(),
            rhs: rhs.ok(),
            status,
        });
    }
    let overall = combine_status(per_equation.iter().map(|e| &e.status).chain([&conditions.overall]));
    QiVerdict {
        per_equation,
        conditions,
        overall,
    }
}

/// Same-arity constructors have identical normal forms.
pub fn is_uniform(assignment: &QiAssignment, sig: &Signature) -> bool {
    let mut by_arity: BTreeMap<usize, Option<NormalForm>> = BTreeMap::new();
    for c in sig.constructors() {
        let Some(e) = assignment.get(c) else { continue };
        let n = sig.arity(c);
        let nf = normal_form(e, n);
        match by_arity.get(&n) {
            None => {
                by_arity.insert(n, nf);
            }
            Some(prev) if *prev != nf || nf.is_none() => return false,
            _ => {}
        }
    }
    true
}

/// Pointwise greatest lower bound of two compatible assignments.
pub fn meet(a1: &QiAssignment, a2: &QiAssignment, sig: &Signature) -> Result<QiAssignment> {
    let mut out = QiAssignment::new();
    for f in sig.ids() {
        let (e1, e2) = (a1.entries.get(&f), a2.entries.get(&f));
        let entry = match (e1, e2) {
            (None, None) => continue,
            (Some(e), None) | (None, Some(e)) => {
                if sig.symbol(f).kind == SymbolKind::Constructor {
                    return Err(Error::IncompatibleAssignments(format!(
                        "constructor {} has an entry on one side only",
                        sig.name(f)
                    )));
                }
                e.clone()
            }
            (Some(x), Some(y)) if sig.is_constructor(f) => {
                let n = sig.arity(f);
                if normal_form(&x.expr, n) != normal_form(&y.expr, n) {
                    return Err(Error::IncompatibleAssignments(format!(
                        "constructor {} is interpreted differently",
                        sig.name(f)
                    )));
                }
                x.clone()
            }
            (Some(x), Some(y)) => QiEntry {
                arity: x.arity,
                expr: if x.expr == y.expr {
                    x.expr.clone()
                } else {
                    QiExpr::Min(vec![x.expr.clone(), y.expr.clone()])
                },
            },
        };
        out.entries.insert(f, entry);
    }
    Ok(out)
}

/// Rational as f64, for reports.
pub fn rat_to_f64(r: &Rat) -> f64 {
    let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
    let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
    if r.is_negative() {
        -(n.abs() / d)
    } else {
        n / d
    }
}
