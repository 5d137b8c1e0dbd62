//! Error types, one per subsystem.

use thiserror::Error;

/// Errors raised while assembling or reading score matrices.
#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix has no {0}")]
    Empty(&'static str),
    #[error("duplicate {kind} label {label:?}")]
    DuplicateLabel { kind: &'static str, label: String },
    #[error("empty {0} label")]
    EmptyLabel(&'static str),
    #[error("score vector has {got} cells, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("unknown {kind} label {label:?}")]
    UnknownLabel { kind: &'static str, label: String },
    #[error("malformed matrix file: {0}")]
    Malformed(String),
    #[error("matrix io: {0}")]
    Io(#[from] std::io::Error),
    #[error("matrix csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Errors raised while parsing and normalizing survey exports.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error(
        "row {line}: answer {answer} for {question} is outside the documented {survey} code set"
    )]
    InvalidAnswer {
        line: u64,
        question: String,
        answer: i64,
        survey: &'static str,
    },
    #[error("row {line}: empty {field}")]
    EmptyField { line: u64, field: &'static str },
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("country code {code:?} not present in the country map (row {line})")]
    UnknownCountry { code: String, line: u64 },
    #[error("operation requires a {expected} table, got {got}")]
    WrongSource {
        expected: &'static str,
        got: &'static str,
    },
    #[error("non-finite mean cannot be normalized")]
    NonFinite,
    #[error("survey export contains no usable rows")]
    EmptyInput,
    #[error("country map: {0}")]
    BadCountryMap(String),
    #[error("ingest io: {0}")]
    Io(#[from] std::io::Error),
    #[error("ingest csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Errors raised while rendering probe prompts.
#[derive(Debug, Error)]
pub enum PromptError {
    #[error("empty {0}")]
    EmptyInput(&'static str),
    #[error("comparative prompt needs two distinct countries, got {0:?} twice")]
    IdenticalCountries(String),
}

/// Errors raised by scoring backends and the score cache.
#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("continuation is empty")]
    EmptyContinuation,
    #[error("continuation tokenizes to zero tokens")]
    ZeroTokens,
    #[error("model {0:?} is unknown to this backend")]
    UnknownModel(String),
    #[error("no table entry for (prefix, continuation) digest pair {0}")]
    MissingEntry(String),
    #[error("remote scoring failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("remote returned status {status}: {message}")]
    Remote { status: u16, message: String },
    #[error("score cache: {0}")]
    Cache(String),
    #[error("score io: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors raised while turning backend scores into model matrices.
#[derive(Debug, Error)]
pub enum BuilderError {
    #[error("cannot difference scores with mixed normalization modes")]
    MixedModes,
    #[error("{missing} of {total} cells unscoreable ({percent:.1}%), above the {limit:.1}% limit:\n{summary}")]
    TooManyMissing {
        missing: usize,
        total: usize,
        percent: f64,
        limit: f64,
        summary: String,
    },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Errors raised by scalar statistics.
#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {need} values, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("{0} has zero variance; correlation undefined")]
    ZeroVariance(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("contingency table has an empty {0} marginal; expected counts undefined")]
    ZeroMarginal(&'static str),
    #[error("empty table")]
    EmptyTable,
    #[error("rank depth {k} exceeds {n} profiles")]
    RankDepth { k: usize, n: usize },
}

/// Errors raised by clustering and partition-comparison metrics.
#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("cannot form {k} clusters from {n} points")]
    TooFewPoints { n: usize, k: usize },
    #[error("k must be at least {0}")]
    KTooSmall(usize),
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("silhouette is undefined for k < 2")]
    SilhouetteUndefined,
    #[error("k range {0}..={1} is empty or invalid for {2} points")]
    BadKRange(usize, usize, usize),
    #[error("assignments cover different items")]
    ItemMismatch,
    #[error("label {label} out of range for k = {k}")]
    BadLabel { label: usize, k: usize },
    #[error("dimension mismatch: point {idx} has {got} coordinates, expected {expected}")]
    DimensionMismatch {
        idx: usize,
        got: usize,
        expected: usize,
    },
}

/// Errors raised while orchestrating the three comparison methods.
#[derive(Debug, Error)]
pub enum MethodError {
    #[error("matrices share only {got} topics; need at least {need}")]
    TooFewCommonTopics { got: usize, need: usize },
    #[error("matrices share only {got} countries; need at least {need}")]
    TooFewCommonCountries { got: usize, need: usize },
    #[error("topic subset {0:?} leaves fewer than 2 topics")]
    SubsetTooSmall(String),
    #[error("every topic was skipped; no probe trials were run")]
    AllTopicsSkipped,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}
