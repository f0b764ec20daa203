//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A (doc_id, term_id) pair appeared twice in the input corpus.
    #[error("duplicate posting for doc {doc_id}, term {term_id}")]
    DuplicatePosting { doc_id: u32, term_id: u32 },

    /// Weights must be non-negative.
    #[error("negative weight {value} for doc {doc_id}, term {term_id}")]
    NegativeWeight {
        doc_id: u32,
        term_id: u32,
        value: f64,
    },

    /// Document ids must be dense in `[0, num_docs)`.
    #[error("document ids are not dense in [0, {num_docs}): {detail}")]
    NonDenseDocIds { num_docs: usize, detail: String },

    /// Scaled alignment needs at least one nonzero weight on each side.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// Argument outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Corpus text input could not be parsed.
    #[error("corpus parse error at line {line}: {msg}")]
    CorpusParse { line: usize, msg: String },

    /// Query file input could not be parsed.
    #[error("query parse error at line {line}: {msg}")]
    QueryParse { line: usize, msg: String },

    /// TREC run/qrels input could not be parsed.
    #[error("trec parse error at line {line}: {msg}")]
    TrecParse { line: usize, msg: String },

    /// Binary index file is malformed; names the section that failed.
    #[error("index format error in section `{section}`: {msg}")]
    IndexFormat { section: String, msg: String },

    /// Binary index file was written by an incompatible version.
    #[error("index version mismatch: found {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    /// Evaluation had no query in common between run and qrels.
    #[error("no evaluable queries: run and qrels share no judged query")]
    NoEvaluableQueries,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
