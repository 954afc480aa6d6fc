//! Machine-readable certification report. Stage results are computed first;
//! the three overall verdicts are then derived from the stage JSON alone, so
//! they can be recomputed from a saved report.

use std::ops::RangeInclusive;

use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use crate::bc::BcCompilation;
use crate::blind::{self, MeasureConfig};
use crate::eppo::{self, ExtendedConfig};
use crate::error::{Error, Result};
use crate::ordering::{check_program, program_precedence, Mode};
use crate::qi::{self, QiAssignment, QiExpr};
use crate::semantics::Budget;
use crate::term::Program;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// sha256 of the canonical program text.
pub fn digest(program: &Program) -> String {
    hex::encode(Sha256::digest(program.to_text().as_bytes()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Unknown,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verdicts {
    pub p_criterion: Verdict,
    pub blind_p: Verdict,
    pub extended_p: Verdict,
}

impl Verdicts {
    /// 0 certified, 1 refuted, 2 unknown.
    pub fn exit_code(&self) -> i32 {
        if self.p_criterion == Verdict::Pass || self.extended_p == Verdict::Pass {
            0
        } else if self.extended_p == Verdict::Fail {
            1
        } else {
            2
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReportConfig {
    pub seed: u64,
    pub budget: Budget,
    pub sizes: RangeInclusive<usize>,
    pub measure: MeasureConfig,
    /// Also tabulate the blind image's growth.
    pub measure_blind: bool,
    /// User polynomial for the bounded-values table.
    pub bound: Option<QiExpr>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            seed: qi::DEFAULT_SEED,
            budget: Budget::default(),
            sizes: 1..=8,
            measure: MeasureConfig::default(),
            measure_blind: false,
            bound: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub stages: Json,
    pub verdicts: Verdicts,
    json: Json,
}

impl Report {
    pub fn to_json(&self) -> &Json {
        &self.json
    }
}

fn error_json(e: &Error) -> Json {
    json!({"error": {"kind": e.kind(), "message": e.to_string()}})
}

/// Derives the overall verdicts from stage fields only.
pub fn verdicts_from_stages(stages: &Json) -> Verdicts {
    let ppo = stages["ordering"]["ppo"]["overall"].as_bool();
    let qi = stages["qi"]["overall"].as_str();
    let p_criterion = match (ppo, qi) {
        (Some(true), Some("Valid")) => Verdict::Pass,
        (Some(false), _) | (_, Some("Invalid")) => Verdict::Fail,
        _ => Verdict::Unknown,
    };
    let uniform = stages["uniform"].as_bool();
    let linear = stages["linearity"]["linear"].as_bool();
    let blind_p = match (p_criterion, uniform, linear) {
        (Verdict::Pass, Some(true), Some(true)) => Verdict::Pass,
        (Verdict::Fail, _, _) | (_, Some(false), _) | (_, _, Some(false)) => Verdict::Fail,
        _ => Verdict::Unknown,
    };
    let extended_p = match stages["extended"]["overall"].as_str() {
        Some("Certified-P") => Verdict::Pass,
        Some("Refuted") => Verdict::Fail,
        _ => Verdict::Unknown,
    };
    Verdicts {
        p_criterion,
        blind_p,
        extended_p,
    }
}

/// Reads `# name (n;m) sexpr` provenance comments written by the BC compiler.
pub fn bc_provenance_from_text(text: &str) -> Vec<Json> {
    text.lines()
        .filter_map(|l| {
            let rest = l.trim().strip_prefix("# bc_")?;
            let (name, rest) = rest.split_once(' ')?;
            let (arity, source) = rest.split_once(' ')?;
            Some(json!({"symbol": format!("bc_{name}"), "arity": arity, "source": source}))
        })
        .collect()
}

pub fn bc_provenance(c: &BcCompilation) -> Vec<Json> {
    let sig = &c.program.signature;
    c.provenance
        .iter()
        .map(|p| {
            json!({
                "symbol": sig.name(p.symbol),
                "arity": format!("({};{})", p.normal, p.safe),
                "source": p.source,
            })
        })
        .collect()
}

/// Runs every stage and assembles the report.
pub fn certify(
    program: &Program,
    assignment: Option<&QiAssignment>,
    bc: Option<Vec<Json>>,
    config: &ReportConfig,
) -> Result<Report> {
    let sig = &program.signature;
    let parse = json!({
        "functions": sig.functions().len(),
        "constructors": sig.constructors().len(),
        "equations": program.equations.len(),
        "word_program": program.is_word_program(),
        "orthogonal": program.is_orthogonal(),
        "orthogonality_violations": program.orthogonality_violations(),
    });

    let ordering_stage = |mode: Mode| -> Json {
        match program_precedence(program, mode).and_then(|p| check_program(program, &p, mode)) {
            Ok(v) => serde_json::to_value(v).expect("serializable"),
            Err(e) => error_json(&e),
        }
    };
    let ppo_prec = program_precedence(program, Mode::Ppo);
    let ordering = json!({"ppo": ordering_stage(Mode::Ppo), "eppo": ordering_stage(Mode::Eppo)});

    let qi_stage = assignment.map(|a| qi::check_qi(program, a, config.seed).to_json());
    let uniform = assignment.map(|a| qi::is_uniform(a, sig));
    let linearity = match &ppo_prec {
        Ok(p) => serde_json::to_value(blind::is_linear(program, p)).expect("serializable"),
        Err(e) => error_json(e),
    };

    let blind_stage = match blind::blind_program(program) {
        Ok(b) => {
            let bppo = program_precedence(&b.program, Mode::Ppo)
                .and_then(|p| check_program(&b.program, &p, Mode::Ppo))
                .map(|v| v.overall)
                .ok();
            let transfer = assignment.map(|a| match blind::transfer_uniform_qi(a, program, &b) {
                Ok(bq) => json!(qi::check_qi(&b.program, &bq, config.seed).overall.name()),
                Err(e) => error_json(&e),
            });
            let growth = if config.measure_blind {
                match blind::measure_strong_poly(
                    &b.program,
                    b.program.main,
                    config.sizes.clone(),
                    config.budget,
                    config.measure,
                ) {
                    Ok(t) => t.to_json(),
                    Err(e) => error_json(&e),
                }
            } else {
                Json::Null
            };
            json!({
                "blindable": true,
                "equations": b.program.equations.len(),
                "duplicates": b.duplicates.len(),
                "ppo": bppo,
                "transferred_qi": transfer,
                "growth": growth,
            })
        }
        Err(e) => json!({"blindable": false, "reason": e.to_string()}),
    };

    let normalization = match program_precedence(program, Mode::Eppo) {
        Ok(prec) if program.is_word_program() => match eppo::normalize(program, &prec) {
            Ok(n) => json!({
                "equations": n.program.equations.len(),
                "added": n.added.len(),
                "removed": n.removed.len(),
                "pruned": n.pruned.len(),
                "normal": eppo::is_normal(&n.program, &prec).map(|r| r.normal).ok(),
            }),
            Err(e) => error_json(&e),
        },
        Ok(_) => json!({"skipped": "not a word program"}),
        Err(e) => error_json(&e),
    };

    let ext_config = ExtendedConfig {
        sizes: config.sizes.clone(),
        budget: config.budget,
        measure: config.measure,
        seed: config.seed,
    };
    let extended = match eppo::certify_extended(program, assignment, config.bound.as_ref(), &ext_config) {
        Ok(v) => v.to_json(),
        Err(e) => error_json(&e),
    };

    let stages = json!({
        "parse": parse,
        "ordering": ordering,
        "qi": qi_stage,
        "uniform": uniform,
        "linearity": linearity,
        "blind": blind_stage,
        "normalization": normalization,
        "extended": extended,
        "bc": bc,
    });
    let verdicts = verdicts_from_stages(&stages);
    let json = json!({
        "schema_version": SCHEMA_VERSION,
        "tool_version": TOOL_VERSION,
        "digest": digest(program),
        "seed": config.seed,
        "budget": config.budget,
        "sizes": [config.sizes.start(), config.sizes.end()],
        "measure": config.measure,
        "stages": stages,
        "verdicts": {
            "P-criterion": verdicts.p_criterion.name(),
            "Blind-P": verdicts.blind_p.name(),
            "Extended-P": verdicts.extended_p.name(),
        },
    });
    Ok(Report { stages, verdicts, json })
}
