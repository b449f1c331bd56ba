use thiserror::Error;

/// Crate-wide error type.
///
/// Errors are data-only (and `Clone`) so that memoized computations can cache
/// failures alongside successes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{rel}` expects arity {expected}, got {got}")]
    ArityMismatch {
        rel: String,
        expected: usize,
        got: usize,
    },
    #[error("index {index} out of range for sort `{sort}` of size {size}")]
    IndexOutOfRange {
        sort: String,
        index: usize,
        size: usize,
    },
    #[error("repeated index {index} in sort `{sort}`: types are non-redundant")]
    RepeatedIndex { sort: String, index: usize },
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("structure too large: {0}")]
    TooLarge(String),
    #[error("enumeration guard exceeded: {0}")]
    GuardExceeded(String),
    #[error("invalid class spec: {0}")]
    InvalidSpec(String),
    #[error("unknown catalog class `{0}`")]
    UnknownCatalog(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("sentence is not well-formed: {0}")]
    IllFormedSentence(String),
    #[error("unknown named sentence `{0}`")]
    UnknownSentence(String),
    #[error("not a one-point extension: {0}")]
    NotOnePointExtension(String),
    #[error("incoherent family: {0}")]
    IncoherentFamily(String),
    #[error("invalid amalgamation problem: {0}")]
    InvalidProblem(String),
    #[error("amalgamation failure at subset {subset:?}: empty completion set")]
    AmalgamationFailure {
        subset: Vec<(String, usize)>,
        witness: String,
    },
    #[error("sampling mode not applicable: {0}")]
    ModeNotApplicable(String),
    #[error("partition table bound exceeded: requested {requested}, bound {bound}")]
    PartitionBound { requested: usize, bound: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("json error: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
