use thiserror::Error;

use crate::query::Direction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unresolved prefix `{prefix}:` at {line}:{column}")]
    UnresolvedPrefix { prefix: String, line: usize, column: usize },

    #[error("malformed IRI `{iri}`")]
    MalformedIri { iri: String },

    #[error("unknown class <{0}>")]
    UnknownClass(String),

    #[error("unknown property <{0}>")]
    UnknownProperty(String),

    #[error("property <{property}> is not applicable to class <{class}> in {direction} direction")]
    InapplicableProperty {
        class: String,
        property: String,
        direction: Direction,
    },

    #[error("target {target} is not compatible with property <{property}> in {direction} direction")]
    IncompatibleTarget {
        property: String,
        target: String,
        direction: Direction,
    },

    #[error("instances not typed by the class of node {node}: {}", .instances.join(", "))]
    TypeMismatch { node: usize, instances: Vec<String> },

    #[error("datatype mismatch: {0}")]
    DatatypeMismatch(String),

    #[error("instance selection must name at least one instance")]
    EmptySelection,

    #[error("node {0} does not exist")]
    UnknownNode(usize),

    #[error("node {0} is not a leaf")]
    NonLeafRemoval(usize),

    #[error("the root node cannot be removed")]
    RootRemoval,

    #[error("nothing to undo")]
    NothingToUndo,

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("grammar error at {line}:{column}: {message}")]
    Grammar {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("column {0} is not flagged as enrichable for this table")]
    UnflaggedColumn(usize),

    #[error("unknown job `{0}`")]
    UnknownJob(String),

    #[error("operation cancelled")]
    Cancelled,

    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Stable machine-readable code, part of the HTTP error payload contract.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax-error",
            Error::UnresolvedPrefix { .. } => "unresolved-prefix",
            Error::MalformedIri { .. } => "malformed-iri",
            Error::UnknownClass(_) => "unknown-class",
            Error::UnknownProperty(_) => "unknown-property",
            Error::InapplicableProperty { .. } => "inapplicable-property",
            Error::IncompatibleTarget { .. } => "incompatible-target",
            Error::TypeMismatch { .. } => "type-mismatch",
            Error::DatatypeMismatch(_) => "datatype-mismatch",
            Error::EmptySelection => "empty-selection",
            Error::UnknownNode(_) => "unknown-node",
            Error::NonLeafRemoval(_) => "non-leaf-removal",
            Error::RootRemoval => "root-removal",
            Error::NothingToUndo => "nothing-to-undo",
            Error::InvalidQuery(_) => "invalid-query",
            Error::Grammar { .. } => "grammar-error",
            Error::UnknownSymbol(_) => "unknown-symbol",
            Error::UnknownDataset(_) => "unknown-dataset",
            Error::UnflaggedColumn(_) => "unflagged-column",
            Error::UnknownJob(_) => "unknown-job",
            Error::Cancelled => "cancelled",
            Error::Io { .. } => "io-error",
            Error::Config(_) => "invalid-config",
        }
    }

    /// Whether the error names an identifier that does not exist (as opposed
    /// to a malformed or invalid request).
    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            Error::UnknownClass(_)
                | Error::UnknownProperty(_)
                | Error::UnknownNode(_)
                | Error::UnknownDataset(_)
                | Error::UnknownJob(_)
        )
    }
}
