use thiserror::Error;

/// Syntax error with a source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{file}:{line}:{col}: {message}")]
pub struct ParseError {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl ParseError {
    pub fn new(file: &str, line: u32, col: u32, message: impl Into<String>) -> Self {
        ParseError { file: file.to_string(), line, col, message: message.into() }
    }
}

/// Problems found while linking declarations into a project.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{origin}: duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String, origin: String },
    #[error("{origin}: `{name}` references unknown {kind} `{target}`")]
    Dangling { kind: &'static str, name: String, target: String, origin: String },
    #[error("cyclic {kind} chain through `{name}`")]
    Cycle { kind: &'static str, name: String },
    #[error("{origin}: {message}")]
    Invalid { origin: String, message: String },
    #[error("no sources given")]
    NoSources,
}

/// Runtime failure while evaluating an expression.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalFault {
    #[error("unbound identifier `{0}`")]
    Unbound(String),
    #[error("`{arg}` is outside the domain of `{fun}`")]
    OutsideDomain { fun: String, arg: String },
    #[error("arithmetic overflow in `{0}`")]
    Overflow(String),
    #[error("type fault: {0}")]
    Type(String),
}
