use std::io;

use thiserror::Error;

use crate::lexicon::Gender;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("word in both lexicons: {}", .0.join(", "))]
    LexiconOverlap(Vec<String>),

    #[error("lexicon entry {0:?} does not tokenize to exactly one token")]
    MultiTokenEntry(String),

    #[error("{0} lexicon is empty")]
    EmptyLexicon(Gender),

    #[error("duplicate document id: {0}")]
    DuplicateDocument(String),

    #[error("collection is empty")]
    EmptyCollection,

    #[error("run contains no entries")]
    EmptyRun,

    #[error("run mixes model tags {first:?} and {other:?}")]
    MixedRunTags { first: String, other: String },

    #[error("duplicate run entry for query {query_id}, document {doc_id}")]
    DuplicateRunEntry { query_id: String, doc_id: String },

    #[error("query {query_id}: expected rank {expected}, found {found}")]
    NonContiguousRanks {
        query_id: String,
        expected: u32,
        found: u32,
    },

    #[error("{query_id}/{doc_id} not in collection")]
    MissingDocument { query_id: String, doc_id: String },

    #[error("model {0}: no query has a non-empty ranking")]
    NoQueries(String),

    #[error("invalid BM25 parameters: {0}")]
    InvalidParams(String),

    #[error("index file: {0}")]
    IndexFormat(String),

    #[error("magnitude table: {0}")]
    MagnitudeFormat(String),

    #[error("query {query_id}: expected {expected} annotations, found {found}")]
    AnnotationCount {
        query_id: String,
        expected: usize,
        found: usize,
    },

    #[error("query {query_id}: annotator {annotator_id} labeled it more than once")]
    DuplicateAnnotation {
        query_id: String,
        annotator_id: String,
    },

    #[error("label references unknown query {0}")]
    UnknownQuery(String),

    #[error("duplicate query id: {0}")]
    DuplicateQuery(String),

    #[error("duplicate model tag: {0}")]
    DuplicateModel(String),

    #[error(
        "query sets differ between {first} and {other}: only in {first}: [{}]; only in {other}: [{}]",
        .only_first.join(", "),
        .only_other.join(", ")
    )]
    QuerySetMismatch {
        first: String,
        other: String,
        only_first: Vec<String>,
        only_other: Vec<String>,
    },

    #[error("reference model {reference} for {model} is not among the runs")]
    MissingReference { model: String, reference: String },

    #[error("expected a {expected} magnitude table, got {found}")]
    MeasureMismatch { expected: String, found: String },

    #[error("unknown {kind} {value:?}")]
    UnknownValue { kind: &'static str, value: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
