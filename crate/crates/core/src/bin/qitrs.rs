use std::io::Write as _;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use qitrs::bc;
use qitrs::blind::{self, MeasureConfig};
use qitrs::call_struct;
use qitrs::eppo;
use qitrs::ordering::{check_program, program_precedence, Mode};
use qitrs::qi::{self, QiAssignment, QiExpr, Status};
use qitrs::report::{self, ReportConfig};
use qitrs::semantics::{self, Budget};
use qitrs::{parse_program, parse_term, Error, Program, Result};

/// Worker thread stack; derivations are walked recursively.
const STACK_BYTES: usize = 1 << 29;

#[derive(Parser)]
#[command(name = "qitrs", version, about = "Constructor term rewriting analysis and polynomial-time certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Clone)]
struct Opts {
    #[arg(long, global = true, default_value_t = qi::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true)]
    budget_rules: Option<u64>,
    #[arg(long, global = true)]
    budget_derivations: Option<usize>,
    /// Input sizes as `a..b` (inclusive).
    #[arg(long, global = true, value_parser = parse_sizes)]
    sizes: Option<RangeInclusive<usize>>,
    /// Quasi-interpretation file of `qi f(X,Y) = expr` lines.
    #[arg(long, global = true)]
    qi: Option<PathBuf>,
    /// Precedence overriding the program's `order:` line.
    #[arg(long, global = true)]
    order: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Ppo)]
    mode: ModeArg,
    #[arg(long, global = true)]
    allow_nonconfluent_memo: bool,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; json unless the command's natural output is a program.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Polynomial in X (the input size) bounding reachable state sizes.
    #[arg(long, global = true)]
    bound: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ppo,
    Eppo,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Dot,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and echo the canonical program.
    Parse { file: PathBuf },
    /// Call-by-value evaluation with the full derivation.
    Eval {
        file: PathBuf,
        term: String,
        /// Enumerate every derivation instead of the first-match one.
        #[arg(long)]
        all: bool,
    },
    /// Memoised evaluation with the cache trace.
    Memo { file: PathBuf, term: String },
    /// Call tree of the cbv derivation.
    Tree { file: PathBuf, term: String },
    /// Call dag of the memoised derivation.
    Dag { file: PathBuf, term: String },
    /// Check PPO or EPPO.
    CheckOrder { file: PathBuf },
    /// Check a quasi-interpretation.
    CheckQi { file: PathBuf },
    /// Blind image of a word program.
    Blind { file: PathBuf },
    /// Linearity under the program precedence.
    Linearity { file: PathBuf },
    /// Normalize an EPPO-ordered word program.
    Normalize { file: PathBuf },
    /// Compile a BC term to a program with its quasi-interpretation.
    BcCompile { file: PathBuf },
    /// Growth table over input sizes.
    Measure {
        file: PathBuf,
        /// Measure the blind image instead.
        #[arg(long)]
        blind: bool,
        /// Tabulate reachable state sizes instead of derivation sizes.
        #[arg(long)]
        values: bool,
    },
    /// Run every stage and print the certification report.
    Certify {
        file: PathBuf,
        /// Also tabulate the growth of the blind image.
        #[arg(long)]
        measure_blind: bool,
    },
}

fn parse_sizes(s: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let (a, b) = s.split_once("..").ok_or("expected a..b")?;
    let a: usize = a.trim().parse().map_err(|_| "bad lower size")?;
    let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| "bad upper size")?;
    if a > b {
        return Err("empty size range".into());
    }
    Ok(a..=b)
}

impl Opts {
    fn budget(&self) -> Budget {
        let mut b = Budget::default();
        if let Some(r) = self.budget_rules {
            b.max_rules = r;
        }
        if let Some(d) = self.budget_derivations {
            b.max_derivations = d;
        }
        b
    }

    fn mode(&self) -> Mode {
        match self.mode {
            ModeArg::Ppo => Mode::Ppo,
            ModeArg::Eppo => Mode::Eppo,
        }
    }

    fn measure(&self) -> MeasureConfig {
        MeasureConfig {
            seed: self.seed,
            ..MeasureConfig::default()
        }
    }

    fn bound(&self) -> Result<Option<QiExpr>> {
        self.bound
            .as_deref()
            .map(|b| qi::parse_expr(b, &["X".to_string()]))
            .transpose()
    }
}

enum Output {
    Json(Json),
    Text(String),
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &PathBuf, opts: &Opts) -> Result<(Program, String)> {
    let text = read(path)?;
    let mut p = parse_program(&text)?;
    if let Some(o) = &opts.order {
        let mut a = p.annotations.clone();
        a.order = Some(o.clone());
        p = p.with_annotations(a);
    }
    Ok((p, text))
}

/// `--qi` file, else the program's own `qi` lines.
fn assignment(p: &Program, opts: &Opts) -> Result<Option<QiAssignment>> {
    match &opts.qi {
        Some(f) => Ok(Some(QiAssignment::parse(&p.signature, &read(f)?)?)),
        None => QiAssignment::from_program(p),
    }
}

fn status_code(s: &Status) -> i32 {
    match s {
        Status::Valid => 0,
        Status::Invalid { .. } => 1,
        Status::Unknown(_) => 2,
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded(_) | Error::CycleDetected(_) | Error::NormalizationCap(_) => 2,
        _ => 3,
    }
}

fn run(cmd: &Command, opts: &Opts) -> Result<(Output, i32)> {
    let budget = opts.budget();
    let fmt = opts.format.unwrap_or(match cmd {
        Command::BcCompile { .. } => Format::Text,
        _ => Format::Json,
    });
    match cmd {
        Command::Parse { file } => {
            let (p, _) = load(file, opts)?;
            if fmt == Format::Text {
                return Ok((Output::Text(p.to_text()), 0));
            }
            Ok((
                Output::Json(json!({
                    "digest": report::digest(&p),
                    "program": p.to_text(),
                    "equations": p.equations.iter().map(|e| p.show_equation(e)).collect::<Vec<_>>(),
                    "word_program": p.is_word_program(),
                    "orthogonal": p.is_orthogonal(),
                })),
                0,
            ))
        }
        Command::Eval { file, term, all } => {
            let (p, _) = load(file, opts)?;
            let t = parse_term(&p.signature, term)?;
            if *all {
                let ev = semantics::eval_cbv(&p, &t, semantics::ChoicePolicy::Exhaustive, budget)?;
                let proofs: Vec<Json> = ev.proofs.iter().map(|pr| semantics::proof_json(&p, pr)).collect();
                return Ok((Output::Json(json!({"truncated": ev.truncated, "derivations": proofs})), 0));
            }
            let proof = semantics::eval_first(&p, &t, budget)?;
            Ok((Output::Json(semantics::proof_json(&p, &proof)), 0))
        }
        Command::Memo { file, term } => {
            let (p, _) = load(file, opts)?;
            let t = parse_term(&p.signature, term)?;
            let proof = semantics::eval_memo(&p, &t, budget, opts.allow_nonconfluent_memo)?;
            Ok((Output::Json(semantics::proof_json(&p, &proof)), 0))
        }
        Command::Tree { file, term } | Command::Dag { file, term } => {
            let (p, _) = load(file, opts)?;
            let t = parse_term(&p.signature, term)?;
            let cs = if matches!(cmd, Command::Tree { .. }) {
                call_struct::call_tree(&p, &semantics::eval_first(&p, &t, budget)?)?
            } else {
                call_struct::call_dag(&p, &semantics::eval_memo(&p, &t, budget, opts.allow_nonconfluent_memo)?)?
            };
            if fmt == Format::Dot {
                return Ok((Output::Text(cs.to_dot(&p)), 0));
            }
            let prec = program_precedence(&p, Mode::Ppo)?;
            let mut j = cs.to_json(&p);
            j["ranks"] = call_struct::rank_stats(&p, &cs, &prec).to_json();
            Ok((Output::Json(j), 0))
        }
        Command::CheckOrder { file } => {
            let (p, _) = load(file, opts)?;
            let prec = program_precedence(&p, opts.mode())?;
            let v = check_program(&p, &prec, opts.mode())?;
            let code = if v.overall { 0 } else { 1 };
            Ok((Output::Json(serde_json::to_value(v).expect("serializable")), code))
        }
        Command::CheckQi { file } => {
            let (p, _) = load(file, opts)?;
            let a = assignment(&p, opts)?.ok_or_else(|| Error::Usage("no quasi-interpretation given".into()))?;
            let v = qi::check_qi(&p, &a, opts.seed);
            let mut j = v.to_json();
            j["uniform"] = json!(qi::is_uniform(&a, &p.signature));
            Ok((Output::Json(j), status_code(&v.overall)))
        }
        Command::Blind { file } => {
            let (p, _) = load(file, opts)?;
            let b = blind::blind_program(&p)?;
            if fmt == Format::Text {
                return Ok((Output::Text(b.program.to_text()), 0));
            }
            let prec = program_precedence(&b.program, Mode::Ppo)?;
            let ppo = check_program(&b.program, &prec, Mode::Ppo)?;
            let transferred = match assignment(&p, opts)? {
                Some(a) => {
                    let bq = blind::transfer_uniform_qi(&a, &p, &b)?;
                    Some(qi::check_qi(&b.program, &bq, opts.seed).to_json())
                }
                None => None,
            };
            Ok((
                Output::Json(json!({
                    "program": b.program.to_text(),
                    "duplicates": b.duplicates,
                    "ppo": ppo,
                    "transferred_qi": transferred,
                })),
                0,
            ))
        }
        Command::Linearity { file } => {
            let (p, _) = load(file, opts)?;
            let prec = program_precedence(&p, Mode::Ppo)?;
            let r = blind::is_linear(&p, &prec);
            let code = if r.linear { 0 } else { 1 };
            Ok((Output::Json(serde_json::to_value(r).expect("serializable")), code))
        }
        Command::Normalize { file } => {
            let (p, _) = load(file, opts)?;
            let prec = program_precedence(&p, Mode::Eppo)?;
            let n = eppo::normalize(&p, &prec)?;
            if fmt == Format::Text {
                return Ok((Output::Text(n.program.to_text()), 0));
            }
            let mut j = n.to_json();
            j["normal"] = json!(eppo::is_normal(&n.program, &prec)?.normal);
            Ok((Output::Json(j), 0))
        }
        Command::BcCompile { file } => {
            let term = bc::parse_bc(&read(file)?)?;
            let c = bc::compile(&term)?;
            if fmt == Format::Json {
                return Ok((
                    Output::Json(json!({
                        "term": term.to_sexpr(),
                        "program": c.program.to_text(),
                        "qi": c.qi.to_text(&c.program.signature),
                        "provenance": report::bc_provenance(&c),
                    })),
                    0,
                ));
            }
            Ok((Output::Text(c.to_text()), 0))
        }
        Command::Measure { file, blind: use_blind, values } => {
            let (p, _) = load(file, opts)?;
            let sizes = opts.sizes.clone().unwrap_or(1..=8);
            if *values {
                let t = eppo::measure_bounded_values(&p, sizes, budget, opts.measure(), opts.bound()?.as_ref())?;
                return Ok(match fmt {
                    Format::Csv => (Output::Text(t.to_csv()), 0),
                    _ => (Output::Json(t.to_json()), 0),
                });
            }
            let target = if *use_blind { blind::blind_program(&p)?.program } else { p };
            let t = blind::measure_strong_poly(&target, target.main, sizes, budget, opts.measure())?;
            Ok(match fmt {
                Format::Csv => (Output::Text(t.to_csv()), 0),
                _ => (Output::Json(t.to_json()), 0),
            })
        }
        Command::Certify { file, measure_blind } => {
            let (p, text) = load(file, opts)?;
            let a = assignment(&p, opts)?;
            let bc = report::bc_provenance_from_text(&text);
            let config = ReportConfig {
                seed: opts.seed,
                budget,
                sizes: opts.sizes.clone().unwrap_or(1..=8),
                measure: opts.measure(),
                measure_blind: *measure_blind,
                bound: opts.bound()?,
            };
            let r = report::certify(&p, a.as_ref(), (!bc.is_empty()).then_some(bc), &config)?;
            let code = r.verdicts.exit_code();
            Ok((Output::Json(r.to_json().clone()), code))
        }
    }
}

fn emit(out: &Output, path: Option<&PathBuf>) -> std::io::Result<()> {
    let text = match out {
        Output::Json(j) => format!("{}\n", serde_json::to_string_pretty(j).expect("serializable")),
        Output::Text(t) => t.clone(),
    };
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let worker = std::thread::Builder::new()
        .stack_size(STACK_BYTES)
        .spawn(move || run(&cli.command, &cli.opts).map(|r| (r, cli.opts.out.clone())));
    let result = match worker.map(|h| h.join()) {
        Ok(Ok(r)) => r,
        _ => {
            eprintln!("internal error: worker thread failed");
            return ExitCode::from(3);
        }
    };
    match result {
        Ok(((out, code), path)) => match emit(&out, path.as_ref()) {
            Ok(()) => ExitCode::from(code as u8),
            Err(e) => {
                eprintln!("cannot write output: {e}");
                ExitCode::from(3)
            }
        },
        Err(e) => {
            let j = json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            println!("{}", serde_json::to_string_pretty(&j).expect("serializable"));
            ExitCode::from(error_code(&e) as u8)
        }
    }
}
