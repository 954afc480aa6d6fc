use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("arity mismatch for `{symbol}`: expected {expected}, found {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("undeclared symbol `{0}`")]
    UndeclaredSymbol(String),
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("not a function call on values: {0}")]
    NotACall(String),
    #[error("no equation matches {0}")]
    NoMatchingEquation(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("program is not orthogonal, memoisation refused: {0}")]
    NonConfluentProgram(String),
    #[error("cycle detected at state {0} (possible nontermination)")]
    CycleDetected(String),
    #[error("invalid precedence: {0}")]
    InvalidPrecedence(String),
    #[error("judgement is not passive")]
    NotPassive,
    #[error("invalid quasi-interpretation: {0}")]
    InvalidAssignment(String),
    #[error("incompatible assignments: {0}")]
    IncompatibleAssignments(String),
    #[error("assignment is not uniform: {0}")]
    NonUniformAssignment(String),
    #[error("cannot blind: {0}")]
    NotBlindable(String),
    #[error("not a word program: {0}")]
    NotWordProgram(String),
    #[error("normalization requires an EPPO-ordered program: {0}")]
    NotEppoOrdered(String),
    #[error("normalization cap of {0} equations exceeded")]
    NormalizationCap(usize),
    #[error("BC arity error: {0}")]
    BcArity(String),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Stable machine-readable tag used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::ArityMismatch { .. } => "arity_mismatch",
            Error::UndeclaredSymbol(_) => "undeclared_symbol",
            Error::UnboundVariable(_) => "unbound_variable",
            Error::Malformed(_) => "malformed_program",
            Error::NotACall(_) => "not_a_call",
            Error::NoMatchingEquation(_) => "no_matching_equation",
            Error::BudgetExceeded(_) => "budget_exceeded",
            Error::NonConfluentProgram(_) => "non_confluent_program",
            Error::CycleDetected(_) => "cycle_detected",
            Error::InvalidPrecedence(_) => "invalid_precedence",
            Error::NotPassive => "not_passive",
            Error::InvalidAssignment(_) => "invalid_assignment",
            Error::IncompatibleAssignments(_) => "incompatible_assignments",
            Error::NonUniformAssignment(_) => "non_uniform_assignment",
            Error::NotBlindable(_) => "not_blindable",
            Error::NotWordProgram(_) => "not_word_program",
            Error::NotEppoOrdered(_) => "not_eppo_ordered",
            Error::NormalizationCap(_) => "normalization_cap",
            Error::BcArity(_) => "bc_arity",
            Error::Usage(_) => "usage",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
