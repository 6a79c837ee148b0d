use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("relation `{0}` must have arity at least 1")]
    ZeroArity(String),

    #[error("relation `{relation}` has arity {expected}, got {found}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },

    #[error("schema mismatch on relation `{relation}`: arity {left} vs {right}")]
    SchemaMismatch {
        relation: String,
        left: usize,
        right: usize,
    },

    #[error("relation `{0}` is not declared in the schema")]
    UnknownRelation(String),

    #[error("constant `@{0}` is not declared in the schema")]
    UnknownConstant(String),

    #[error("element `{0}` does not belong to the database")]
    UnknownElement(String),

    #[error("constant `@{0}` is not interpreted by the database")]
    UninterpretedConstant(String),

    #[error("malformed database: {0}")]
    MalformedDatabase(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("search cap exceeded: {0}")]
    CapExceeded(String),

    #[error("polynomial error: {0}")]
    Polynomial(String),
}
