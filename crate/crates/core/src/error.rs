use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("index gap: {0}")]
    IndexGap(String),
    #[error("line {line}: duplicate literal {atom}")]
    DuplicateLiteral { line: usize, atom: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PddlError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported construct `{0}`")]
    Unsupported(String),
    #[error("malformed domain: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("no plan traces given")]
    NoTraces,
    #[error("action {action}: expected arity {expected}, found {found}")]
    ArityMismatch {
        action: String,
        expected: usize,
        found: usize,
    },
    #[error("k-means needs at least {k} points, got {n}")]
    InsufficientPoints { k: usize, n: usize },
    #[error("rule set has no rules")]
    EmptyRuleSet,
    #[error("rule set has no {0} rule")]
    MissingClass(&'static str),
    #[error("meta-state asserts contradictory values for {0}")]
    Contradiction(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("action {0} is not defined by the domain")]
    UnknownAction(String),
    #[error("fluent {0} has no value")]
    UnboundFluent(String),
    #[error("action {action}: learned arity {learned}, reference arity {reference}")]
    ArityMismatch {
        action: String,
        learned: usize,
        reference: usize,
    },
    #[error("need at least {needed} traces, got {got}")]
    TooFewTraces { needed: usize, got: usize },
    #[error("dead end after {steps} steps in problem {problem}: no applicable action")]
    DeadEnd { problem: usize, steps: usize },
    #[error(transparent)]
    Learn(#[from] LearnError),
}
