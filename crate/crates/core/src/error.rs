use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("vector has zero length (norm below 1e-12)")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("k = {k} is out of range 1..={len}")]
    KOutOfRange { k: usize, len: usize },
    #[error("weight {0} is outside [0, 1]")]
    WeightOutOfRange(f64),
    #[error("not a probability vector: {0}")]
    InvalidProbVector(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("{} contains no labels", .0.display())]
    EmptyFile(PathBuf),
    #[error("label is empty")]
    EmptyLabel,
    #[error("no embedding for {0:?}")]
    MissingEmbedding(String),
    #[error("embedding {id:?} is not unit-norm (norm {norm})")]
    NotUnitNorm { id: String, norm: f64 },
    #[error("prompt embeddings have not been attached to the taxonomy")]
    EmbeddingsNotAttached,

    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("bad magic bytes {0:02x?}, expected \"ZSE1\"")]
    BadMagic(Vec<u8>),
    #[error("unsupported embedding file version {0}")]
    UnsupportedVersion(u16),
    #[error("malformed embedding file header: {0}")]
    BadHeader(String),
    #[error("header declares {declared} records but the file holds {found}")]
    CountMismatch { declared: u64, found: u64 },
    #[error("record {id:?} violates an invariant: {reason}")]
    InvariantViolation { id: String, reason: String },

    #[error("{count} sampled item(s) have no verdict (first: {first:?})")]
    MissingVerdict { count: usize, first: String },
    #[error("no sweep row satisfies the coverage floor")]
    NoEligibleRow,
    #[error("no {0} verdicts to average")]
    EmptyPartition(&'static str),
    #[error("class {0:?} has no hit/miss verdicts")]
    EmptyClass(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
