use thiserror::Error;

/// Errors raised anywhere in the arrangement pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no candidate survives filtering: {0}")]
    EmptyCandidateSet(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no feasible placement for {0}")]
    NoFeasiblePlacement(String),

    #[error("no trained reference category present for '{0}'")]
    NoReference(String),

    #[error("candidate supports differ: {0}")]
    MismatchedCandidates(String),

    #[error("category mismatch: '{0}' vs '{1}'")]
    CategoryMismatch(String, String),

    #[error("need at least {needed} scenes, got {got}")]
    TooFewScenes { needed: usize, got: usize },

    #[error("unknown category '{0}'")]
    UnknownCategory(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}, column {column} ({path}): {message}")]
    Parse {
        line: usize,
        column: usize,
        path: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::EmptyCandidateSet(_) => "EmptyCandidateSet",
            Error::InsufficientData(_) => "InsufficientData",
            Error::NoFeasiblePlacement(_) => "NoFeasiblePlacement",
            Error::NoReference(_) => "NoReference",
            Error::MismatchedCandidates(_) => "MismatchedCandidates",
            Error::CategoryMismatch(..) => "CategoryMismatch",
            Error::TooFewScenes { .. } => "TooFewScenes",
            Error::UnknownCategory(_) => "UnknownCategory",
            Error::Config(_) => "ConfigError",
            Error::Parse { .. } => "ParseError",
            Error::Validation(_) => "ValidationError",
        }
    }
}
