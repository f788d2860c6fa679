use thiserror::Error;

/// Errors raised anywhere in the engine, translators and analyzers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("b-thread '{name}' failed: {message}")]
    BThread { name: String, message: String },

    #[error("b-thread '{name}' yielded an invalid statement: {message}")]
    InvalidStatement { name: String, message: String },

    #[error("duplicate b-thread name '{0}'")]
    DuplicateBThread(String),

    #[error("arbiter was asked to select from an empty set of events")]
    EmptyEnabledSet,

    #[error("scripted policy expected '{expected}' at step {step} but it is not enabled")]
    ScriptMismatch { step: usize, expected: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("choice has {count} outcomes, above the cap of {cap}")]
    SupportTooLarge { count: u128, cap: u128 },

    #[error("b-thread '{0}' is non-deterministic under replay")]
    NonDeterministicBThread(String),

    #[error("state space exceeds the cap of {cap} {what}")]
    StateExplosion { what: &'static str, cap: usize },

    #[error("b-thread '{0}' yields constraint statements, which cannot be explored over a finite universe")]
    ConstraintNotExplorable(String),

    #[error("statement kind not supported by this arbiter: {0}")]
    UnsupportedStatement(String),

    #[error("sort error: {0}")]
    Sort(String),

    #[error("variable '{0}' has no value in the assignment")]
    MissingVariable(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("SMT solver unavailable: {0}")]
    SolverUnavailable(String),

    #[error("SMT solver timed out after {0} ms")]
    SolverTimeout(u64),

    #[error("could not parse solver output: {0}")]
    Parse(String),

    #[error("b-thread '{0}' has probabilistic choice states, which SMV cannot express")]
    ProbabilisticUnsupported(String),

    #[error("identifier collision: '{first}' and '{second}' both map to '{ident}'")]
    IdentifierCollision { first: String, second: String, ident: String },

    #[error("value iteration did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("action {0} is masked")]
    IllegalAction(usize),

    #[error("observation space too large: {0} table entries")]
    StateSpaceTooLarge(usize),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("run {index} failed: {source}")]
    Run { index: usize, source: Box<Error> },

    #[error("unknown example '{0}'")]
    UnknownExample(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
