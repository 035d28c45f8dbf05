use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed N-Triples statement: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("ontology has no named classes or individuals")]
    EmptyOntology,

    #[error("no entity has annotation words")]
    EmptyVocabulary,

    #[error("non-finite activation in {layer} layer")]
    NonFiniteActivation { layer: &'static str },

    #[error("autoencoder loss diverged at epoch {epoch}")]
    DivergedLoss { epoch: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("embedding tables cover different entities ({} missing, first: {})", .missing.len(), .missing.first().map(String::as_str).unwrap_or("-"))]
    EntityMismatch { missing: Vec<String> },

    #[error("line {line}: expected {expected} components, found {found}")]
    DimInconsistent {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate entity {0}")]
    DuplicateEntity(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("need at least 10 pairs to split, found {found}")]
    TooFewPairs { found: usize },

    #[error("could not draw a negative superclass for {subject} after {attempts} attempts")]
    ExhaustedPool { subject: String, attempts: usize },

    #[error("no embedding for {0}")]
    MissingEmbedding(String),

    #[error("training data contains a single class")]
    SingleClassData,

    #[error("expected feature vector of length {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("true superclass {0} is not among the candidates")]
    NotACandidate(String),

    #[error("no queries to evaluate")]
    NoQueries,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
