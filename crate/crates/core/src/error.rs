use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet size {0} (must be at least 2)")]
    InvalidAlphabet(usize),

    #[error("degenerate range: all values are equal")]
    DegenerateRange,

    #[error("collapsed cells: split at percentile {percentile} coincides with its neighbour")]
    CollapsedCells { percentile: f64 },

    #[error("too few distinct values: {distinct} distinct, alphabet size {alphabet_size}")]
    TooFewDistinct { distinct: usize, alphabet_size: usize },

    #[error("unknown category {category:?} for variable {variable:?}")]
    UnknownCategory { variable: String, category: String },

    #[error("channel has no observed values")]
    AllMissing,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("single-class dataset: {positives} positives, {negatives} negatives")]
    SingleClassDataset { positives: usize, negatives: usize },

    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("sequence too short: length {length}, need at least {required}")]
    SequenceTooShort { length: usize, required: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("non-finite loss at epoch {epoch}, sample {sample}")]
    NonFiniteLoss { epoch: usize, sample: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("digest mismatch: expected {expected}, found {found}")]
    DigestMismatch { expected: String, found: String },

    #[error("{path}:{line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidAlphabet(_)
            | Error::InvalidConfig(_)
            | Error::ShapeMismatch(_)
            | Error::Json { .. } => ErrorKind::Config,
            Error::NonFinite(_) | Error::NonFiniteLoss { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
