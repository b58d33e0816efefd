//! Gender bias measurement for ranked retrieval results.
//!
//! The crate computes per-document female/male magnitudes from a pair of
//! gender-definitional word lists, turns ranked lists of documents into
//! rank-bias (`RaB`) and average-rank-bias (`ARaB`) scores, and ships the
//! supporting pieces needed to run an audit end to end: a TREC run parser,
//! an in-memory BM25 retriever for baseline rankings, query pooling and
//! annotation aggregation for building non-gendered query sets, and report
//! emitters.
//!
//! All bias values are signed: positive means the ranking leans towards
//! male-related content, negative towards female-related content.

pub mod corpus;
pub mod error;
pub mod lexicon;
pub mod metrics;
pub mod pool;
pub mod queries;
pub mod report;
pub mod retrieval;
pub mod runs;

mod num;

pub use corpus::{
    compute_magnitude_table, magnitude, tokenize, Corpus, Document, GenderMagnitude,
    MagnitudeTable, Measure, TfMode,
};
pub use error::{Error, Result};
pub use lexicon::{Gender, GenderLexicon};
pub use metrics::{model_bias, query_bias, Cutoff, ModelBias, QueryBias};
pub use pool::{Category, PoolSpec, QueryLabel};
pub use queries::QuerySet;
pub use report::{BiasReport, BiasRow, Metric};
pub use retrieval::{Bm25Params, Index};
pub use runs::{MissingPolicy, RankMode, RankedList, Run, RunEntry};
