//! The blinding map onto unary numerals, linearity, uniform QI transfer,
//! worst-case growth measurement and the empirical growth classifier.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::json;

use crate::call_struct::arity_bound;
use crate::error::{Error, Result};
use crate::explore::{word_inputs, word_length, Explorer};
use crate::ordering::Precedence;
use crate::qi::{self, QiAssignment, QiExpr, Rat};
use crate::semantics::{Budget, DerivationProof, Judgement};
use crate::term::{Annotations, Equation, Program, Signature, SymId, SymbolKind, Term};

pub const BLIND_SUCC: &str = "s";
pub const BLIND_ZERO: &str = "0";
pub const BLIND_PREFIX: &str = "bl_";

#[derive(Clone, Debug)]
pub struct BlindProgram {
    pub program: Program,
    /// Original symbol to blind symbol.
    pub provenance: BTreeMap<SymId, SymId>,
    /// Pairs (i, j), i < j, of equations with identical blind images.
    pub duplicates: Vec<(usize, usize)>,
}

impl BlindProgram {
    pub fn map_term(&self, t: &Term) -> Term {
        t.map_symbols(&|f| self.provenance[&f])
    }

    /// The blind program with duplicate equations removed (first kept).
    pub fn deduplicated(&self) -> Result<Program> {
        let drop: std::collections::BTreeSet<usize> = self.duplicates.iter().map(|&(_, j)| j).collect();
        let eqs: Vec<Equation> = self
            .program
            .equations
            .iter()
            .filter(|e| !drop.contains(&e.index))
            .cloned()
            .collect();
        Program::new(self.program.signature.clone(), eqs, self.program.main)
    }
}

pub fn blind_program(program: &Program) -> Result<BlindProgram> {
    let sig = &program.signature;
    if let Some(c) = sig.constructors().into_iter().find(|&c| sig.arity(c) >= 2) {
        return Err(Error::NotBlindable(format!(
            "constructor {} has arity {}",
            sig.name(c),
            sig.arity(c)
        )));
    }
    let mut bsig = Signature::new();
    let s = bsig.add(BLIND_SUCC, SymbolKind::Constructor, 1)?;
    let z = bsig.add(BLIND_ZERO, SymbolKind::Constructor, 0)?;
    let mut provenance = BTreeMap::new();
    for f in sig.ids() {
        let b = if sig.is_constructor(f) {
            if sig.arity(f) == 1 {
                s
            } else {
                z
            }
        } else {
            bsig.add(&format!("{BLIND_PREFIX}{}", sig.name(f)), SymbolKind::Function, sig.arity(f))?
        };
        provenance.insert(f, b);
    }
    let map = |f: SymId| provenance[&f];
    let equations: Vec<Equation> = program
        .equations
        .iter()
        .map(|e| Equation {
            function: map(e.function),
            patterns: e.patterns.iter().map(|p| p.map_symbols(&map)).collect(),
            rhs: e.rhs.map_symbols(&map),
            index: e.index,
        })
        .collect();
    let mut duplicates = Vec::new();
    for i in 0..equations.len() {
        for j in i + 1..equations.len() {
            let (a, b) = (&equations[i], &equations[j]);
            if a.function == b.function && a.patterns == b.patterns && a.rhs == b.rhs {
                duplicates.push((i, j));
            }
        }
    }
    let bp = Program::new(bsig, equations, map(program.main))?.with_annotations(Annotations::default());
    Ok(BlindProgram {
        program: bp,
        provenance,
        duplicates,
    })
}

/// Image of a derivation under the blinding map; a derivation of the blind
/// program with the same rule count.
pub fn blind_proof(blind: &BlindProgram, proof: &DerivationProof) -> DerivationProof {
    fn go(b: &BlindProgram, j: &Judgement) -> Arc<Judgement> {
        let children = j.children.iter().map(|c| go(b, c)).collect();
        Arc::new(Judgement::new(
            b.map_term(&j.lhs),
            b.map_term(&j.result),
            j.rule,
            children,
            j.equation,
        ))
    }
    DerivationProof::new(&blind.program, go(blind, &proof.root), false, Vec::new())
}

#[derive(Clone, Debug, Serialize)]
pub struct FunctionLinearity {
    pub function: String,
    pub linear: bool,
    /// An equation whose rhs has two or more calls in the class.
    pub witness: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearityReport {
    pub per_function: Vec<FunctionLinearity>,
    pub linear: bool,
}

/// g is linear when every rhs of a g-equation has at most one occurrence of
/// a symbol equivalent to g.
pub fn is_linear(program: &Program, prec: &Precedence) -> LinearityReport {
    let sig = &program.signature;
    let per_function: Vec<FunctionLinearity> = sig
        .functions()
        .into_iter()
        .map(|g| {
            let witness = program
                .equations_for(g)
                .find(|e| e.rhs.count_symbol(&|h| sig.is_function(h) && prec.equiv(h, g)) > 1)
                .map(|e| e.index);
            FunctionLinearity {
                function: sig.name(g).to_string(),
                linear: witness.is_none(),
                witness,
            }
        })
        .collect();
    let linear = per_function.iter().all(|f| f.linear);
    LinearityReport { per_function, linear }
}

/// Carries a uniform assignment over to the blind image.
pub fn transfer_uniform_qi(assignment: &QiAssignment, program: &Program, blind: &BlindProgram) -> Result<QiAssignment> {
    let sig = &program.signature;
    if !qi::is_uniform(assignment, sig) {
        return Err(Error::NonUniformAssignment(
            "same-arity constructors are interpreted differently".into(),
        ));
    }
    let bsig = &blind.program.signature;
    let common = |arity: usize, default: QiExpr| {
        sig.constructors()
            .into_iter()
            .filter(|&c| sig.arity(c) == arity)
            .find_map(|c| assignment.get(c).cloned())
            .unwrap_or(default)
    };
    let mut out = QiAssignment::new();
    let s = bsig.lookup(BLIND_SUCC).expect("blind signature");
    let z = bsig.lookup(BLIND_ZERO).expect("blind signature");
    out.set(bsig, s, common(1, QiExpr::Sum(vec![QiExpr::Arg(0), QiExpr::int(1)])))?;
    out.set(bsig, z, common(0, QiExpr::int(1)))?;
    for f in sig.functions() {
        if let Some(e) = assignment.get(f) {
            out.set(bsig, blind.provenance[&f], e.clone())?;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- measurement

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeasureConfig {
    /// Enumerate all inputs of a size when there are at most this many.
    pub input_cap: usize,
    /// Seeded draws when the cap is exceeded.
    pub samples: usize,
    pub seed: u64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            input_cap: 4096,
            samples: 512,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GrowthRow {
    pub n: usize,
    pub worst_rules: u64,
    pub worst_result_size: usize,
    pub derivations: u128,
    pub truncated: bool,
    pub inputs: usize,
    pub sampled: bool,
    /// Concrete polynomial bound at this size, when one was assembled.
    pub bound: Option<String>,
    pub within_bound: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
    /// Set when exploration stopped early on a budget.
    pub note: Option<String>,
}

impl GrowthTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,worst_rules,worst_result_size,derivations,truncated\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.n, r.worst_rules, r.worst_result_size, r.derivations, r.truncated
            );
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "rows": self.rows.iter().map(|r| json!({
                "n": r.n,
                "worst_rules": r.worst_rules,
                "worst_result_size": r.worst_result_size,
                "derivations": r.derivations.to_string(),
                "truncated": r.truncated,
                "inputs": r.inputs,
                "sampled": r.sampled,
                "bound": r.bound,
                "within_bound": r.within_bound,
            })).collect::<Vec<_>>(),
            "note": self.note,
            "classification": {
                "worst_rules": classify_growth(&self.series(|r| r.worst_rules as f64)).name(),
                "worst_result_size": classify_growth(&self.series(|r| r.worst_result_size as f64)).name(),
                "label": "empirical, not a proof",
            },
        })
    }

    /// (n, metric) over untruncated rows.
    pub fn series(&self, metric: impl Fn(&GrowthRow) -> f64) -> Vec<(usize, f64)> {
        self.rows.iter().filter(|r| !r.truncated).map(|r| (r.n, metric(r))).collect()
    }
}

/// Worst-case rule count and result size over all inputs of each size and
/// all derivations, by dynamic programming over states.
pub fn measure_strong_poly(
    program: &Program,
    main: SymId,
    sizes: RangeInclusive<usize>,
    budget: Budget,
    config: MeasureConfig,
) -> Result<GrowthTable> {
    let sig = &program.signature;
    let mut rows = Vec::new();
    let mut note = None;
    for n in sizes {
        let (inputs, sampled) = word_inputs(program, main, n, config.input_cap, config.samples, config.seed)?;
        let mut ex = Explorer::new(program, budget);
        let mut row = GrowthRow {
            n,
            worst_rules: 0,
            worst_result_size: 0,
            derivations: 0,
            truncated: false,
            inputs: inputs.len(),
            sampled,
            bound: None,
            within_bound: None,
        };
        let mut stop = false;
        for args in &inputs {
            match ex.outcomes(&Term::App(main, args.clone())) {
                Ok(outs) => {
                    for (v, o) in outs {
                        row.worst_rules = row.worst_rules.max(o.worst_rules);
                        row.worst_result_size = row.worst_result_size.max(word_length(sig, &v));
                        row.derivations = row.derivations.saturating_add(o.derivations);
                    }
                }
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
        rows.push(row);
        if stop {
            break;
        }
    }
    Ok(GrowthTable { rows, note })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Growth {
    ExponentialConsistent,
    PolynomialConsistent,
    Inconclusive,
}

impl Growth {
    pub fn name(self) -> &'static str {
        match self {
            Growth::ExponentialConsistent => "exponential-consistent",
            Growth::PolynomialConsistent => "polynomial-consistent",
            Growth::Inconclusive => "inconclusive",
        }
    }
}

/// Per-step ratio at or above which growth counts as exponential.
pub const EXP_RATIO: f64 = 1.5;
/// Allowed rise of the effective degree for polynomial growth.
pub const DEGREE_SLACK: f64 = 1.1;

/// Successive-ratio analysis on the last half of the series. The effective
/// degree log(y'/y)/log(n'/n) grows without bound for exponentials and
/// settles for polynomials. Empirical, not a proof.
pub fn classify_growth(series: &[(usize, f64)]) -> Growth {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(n, y)| *n >= 1 && *y > 0.0)
        .map(|&(n, y)| (n as f64, y))
        .collect();
    if pts.len() < 3 {
        return Growth::Inconclusive;
    }
    let mut ratios = Vec::new();
    let mut degrees = Vec::new();
    for w in pts.windows(2) {
        let ((n0, y0), (n1, y1)) = (w[0], w[1]);
        let step = n1 - n0;
        ratios.push((y1 / y0).powf(1.0 / step));
        degrees.push((y1 / y0).ln() / (n1 / n0).ln());
    }
    let half = ratios.len() / 2;
    let (r, d) = (&ratios[half..], &degrees[half..]);
    let first = d[0];
    let last = *d.last().unwrap();
    if r.iter().all(|&x| x >= EXP_RATIO) && last > first {
        return Growth::ExponentialConsistent;
    }
    if last <= first.max(0.0) * DEGREE_SLACK + 1e-9 {
        return Growth::PolynomialConsistent;
    }
    // an additive offset makes the degree climb towards the true one from
    // below with shrinking increments
    let settling = d.windows(3).all(|w| w[2] - w[1] <= w[1] - w[0] + 1e-9);
    if *r.last().unwrap() < EXP_RATIO && settling {
        return Growth::PolynomialConsistent;
    }
    Growth::Inconclusive
}

/// Bound on the rule count of every derivation of `main` on inputs of
/// total word length `n`, for programs ordered by PPO with a valid QI and
/// linear: Q = ⌊main⌋ at a·(n+1) per argument bounds every argument, S =
/// 1 + m·Q bounds active terms and same-class chains, the rank recurrence
/// bounds call tree nodes T, and each node contributes at most 1 + R·S rules.
pub fn rule_count_bound(program: &Program, assignment: &QiAssignment, prec: &Precedence, n: usize) -> Result<BigInt> {
    let sig = &program.signature;
    let a = qi::max_constructor_constant(assignment, sig)
        .ok_or_else(|| Error::InvalidAssignment("constructor entries are not additive".into()))?;
    let main = program.main;
    let k = sig.arity(main);
    let e = assignment
        .get(main)
        .ok_or_else(|| Error::InvalidAssignment(format!("no entry for {}", sig.name(main))))?;
    let arg = &a * qi::rat((n + 1) as i64);
    let q = ceil(&e.eval(&vec![arg; k]));
    let m = BigInt::from(sig.max_arity());
    let s = BigInt::one() + &m * &q;
    let ranks = prec.ranks(sig);
    let max_rank = sig.functions().iter().map(|f| ranks[f.0 as usize]).max().unwrap_or(0);
    let d = BigInt::from(arity_bound(program));
    // rank recurrence with A = S over big integers
    let mut above = BigInt::zero();
    for rank in (1..=max_rank).rev() {
        let b = if rank == max_rank { s.clone() } else { &d * &s * &above };
        above += b;
    }
    let r = BigInt::from(crate::semantics::activation_growth(program));
    let input = BigInt::from(1 + k + n);
    Ok(above * (BigInt::one() + r * &s) + input)
}

fn ceil(x: &Rat) -> BigInt {
    let (q, r) = x.numer().div_rem(x.denom());
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

/// Attaches the assembled bound to every row.
pub fn attach_bound(table: &mut GrowthTable, program: &Program, assignment: &QiAssignment, prec: &Precedence) -> Result<()> {
    for row in &mut table.rows {
        let b = rule_count_bound(program, assignment, prec, row.n)?;
        row.within_bound = Some(BigInt::from(row.worst_rules) <= b);
        row.bound = Some(b.to_string());
    }
    Ok(())
}
