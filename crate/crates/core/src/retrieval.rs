//! In-memory inverted index and Okapi BM25 ranking.
//!
//! Term weights use `idf = ln(1 + (N - df + 0.5) / (df + 0.5))`, which stays
//! positive for every document frequency. Documents that match no query term
//! are never returned. Ties are broken by ascending document id.
//!
//! The on-disk index layout (all integers little-endian):
//!
//! ```text
//! "RBA1" | version: u32 | n_docs: u64
//! n_docs × ( id_len: u32 | id bytes | doc_length: u32 )
//! n_terms: u64
//! n_terms × ( term_len: u32 | term bytes | n_postings: u32 | n_postings × ( doc: u32 | tf: u32 ) )
//! ```
//!
//! Terms are stored in byte order and postings in document order, so equal
//! inputs always serialize to equal bytes.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::corpus::{for_each_token, Corpus, Document, BATCH_SIZE};
use crate::error::{Error, Result};
use crate::queries::QuerySet;
use crate::runs::{RankedList, Run};

pub const MAGIC: &[u8; 4] = b"RBA1";
pub const FORMAT_VERSION: u32 = 1;

/// Human-readable name of the IDF formula, for run metadata.
pub const IDF_VARIANT: &str = "ln(1 + (N - df + 0.5) / (df + 0.5))";

/// Tag written into runs produced by [`search_all`].
pub const RUN_TAG: &str = "bm25";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.6, b: 0.8 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1.is_finite() && k1 >= 0.0) {
            return Err(Error::InvalidParams(format!("k1 must be >= 0, got {k1}")));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidParams(format!(
                "b must be in [0, 1], got {b}"
            )));
        }
        Ok(Bm25Params { k1, b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    terms: Vec<String>,
    postings: Vec<Vec<Posting>>,
    lookup: HashMap<String, u32>,
    avgdl: f64,
}

/// Build an index over an in-memory corpus.
pub fn build_index(corpus: &Corpus) -> Result<Index> {
    Index::build(corpus.stream())
}

struct Tokenized {
    doc_id: String,
    length: u32,
    counts: Vec<(String, u32)>,
}

fn tokenize_document(doc: Document) -> Tokenized {
    let mut counts: HashMap<String, u32> = HashMap::new();
    let mut length = 0u32;
    for_each_token(&doc.text, |token| {
        length += 1;
        match counts.get_mut(token) {
            Some(c) => *c += 1,
            None => {
                counts.insert(token.to_string(), 1);
            }
        }
    });
    Tokenized {
        doc_id: doc.doc_id,
        length,
        counts: counts.into_iter().collect(),
    }
}

impl Index {
    /// Build from a document stream. Documents are tokenized in parallel
    /// batches and merged in input order.
    pub fn build<I>(documents: I) -> Result<Index>
    where
        I: IntoIterator<Item = Result<Document>>,
    {
        let mut doc_ids = Vec::new();
        let mut doc_lengths = Vec::new();
        let mut seen = HashSet::new();
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut documents = documents.into_iter();
        loop {
            let batch = documents
                .by_ref()
                .take(BATCH_SIZE)
                .collect::<Result<Vec<_>>>()?;
            if batch.is_empty() {
                break;
            }
            let tokenized: Vec<Tokenized> = batch.into_par_iter().map(tokenize_document).collect();
            for doc in tokenized {
                if !seen.insert(doc.doc_id.clone()) {
                    return Err(Error::DuplicateDocument(doc.doc_id));
                }
                let idx = u32::try_from(doc_ids.len())
                    .map_err(|_| Error::IndexFormat("more than u32::MAX documents".into()))?;
                for (term, tf) in doc.counts {
                    postings
                        .entry(term)
                        .or_default()
                        .push(Posting { doc: idx, tf });
                }
                doc_ids.push(doc.doc_id);
                doc_lengths.push(doc.length);
            }
        }
        if doc_ids.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let mut terms: Vec<(String, Vec<Posting>)> = postings.into_iter().collect();
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let (terms, postings): (Vec<_>, Vec<_>) = terms.into_iter().unzip();
        Ok(Index::assemble(doc_ids, doc_lengths, terms, postings))
    }

    fn assemble(
        doc_ids: Vec<String>,
        doc_lengths: Vec<u32>,
        terms: Vec<String>,
        postings: Vec<Vec<Posting>>,
    ) -> Index {
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avgdl = total as f64 / doc_lengths.len() as f64;
        let lookup = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Index {
            doc_ids,
            doc_lengths,
            terms,
            postings,
            lookup,
            avgdl,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn doc_id(&self, doc: u32) -> &str {
        &self.doc_ids[doc as usize]
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u32> {
        self.doc_ids
            .iter()
            .position(|d| d == doc_id)
            .map(|i| self.doc_lengths[i])
    }

    /// Postings of a term as `(doc_id, tf)` in document order.
    pub fn postings(&self, term: &str) -> Option<Vec<(&str, u32)>> {
        let &t = self.lookup.get(term)?;
        Some(
            self.postings[t as usize]
                .iter()
                .map(|p| (self.doc_id(p.doc), p.tf))
                .collect(),
        )
    }

    /// Top `k` documents for `query_text` as `(doc_id, score)`, best first.
    pub fn search(&self, query_text: &str, params: &Bm25Params, k: usize) -> Vec<(&str, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let n = self.doc_count() as f64;
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for_each_token(query_text, |token| {
            let Some(&t) = self.lookup.get(token) else {
                return;
            };
            let list = &self.postings[t as usize];
            let df = list.len() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            for p in list {
                let tf = f64::from(p.tf);
                let dl = f64::from(self.doc_lengths[p.doc as usize]);
                let norm = params.k1 * (1.0 - params.b + params.b * dl / self.avgdl);
                *scores.entry(p.doc).or_insert(0.0) += idf * tf * (params.k1 + 1.0) / (tf + norm);
            }
        });
        let mut ranked: Vec<(u32, f64)> = scores.into_iter().filter(|&(_, s)| s > 0.0).collect();
        let order = |a: &(u32, f64), b: &(u32, f64)| -> Ordering {
            b.1.total_cmp(&a.1)
                .then_with(|| self.doc_id(a.0).cmp(self.doc_id(b.0)))
        };
        if ranked.len() > k {
            ranked.select_nth_unstable_by(k - 1, order);
            ranked.truncate(k);
        }
        ranked.sort_unstable_by(order);
        ranked
            .into_iter()
            .map(|(doc, score)| (self.doc_id(doc), score))
            .collect()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&(self.doc_ids.len() as u64).to_le_bytes())?;
        for (id, len) in self.doc_ids.iter().zip(&self.doc_lengths) {
            write_bytes(&mut out, id.as_bytes())?;
            out.write_all(&len.to_le_bytes())?;
        }
        out.write_all(&(self.terms.len() as u64).to_le_bytes())?;
        for (term, list) in self.terms.iter().zip(&self.postings) {
            write_bytes(&mut out, term.as_bytes())?;
            out.write_all(&(list.len() as u32).to_le_bytes())?;
            for p in list {
                out.write_all(&p.doc.to_le_bytes())?;
                out.write_all(&p.tf.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Index> {
        let mut magic = [0u8; 4];
        read_exact(&mut input, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::IndexFormat("bad magic bytes".into()));
        }
        let version = read_u32(&mut input)?;
        if version != FORMAT_VERSION {
            return Err(Error::IndexFormat(format!("unsupported version {version}")));
        }
        let n_docs = read_u64(&mut input)?;
        if n_docs == 0 || n_docs > u64::from(u32::MAX) {
            return Err(Error::IndexFormat(format!(
                "invalid document count {n_docs}"
            )));
        }
        let mut doc_ids = Vec::new();
        let mut doc_lengths = Vec::new();
        for _ in 0..n_docs {
            doc_ids.push(read_string(&mut input)?);
            doc_lengths.push(read_u32(&mut input)?);
        }
        let n_terms = read_u64(&mut input)?;
        let mut terms: Vec<String> = Vec::new();
        let mut postings = Vec::new();
        for _ in 0..n_terms {
            let term = read_string(&mut input)?;
            if terms.last().is_some_and(|prev| prev >= &term) {
                return Err(Error::IndexFormat(format!(
                    "terms out of order at {term:?}"
                )));
            }
            let count = read_u32(&mut input)?;
            let mut list: Vec<Posting> = Vec::new();
            for _ in 0..count {
                let doc = read_u32(&mut input)?;
                let tf = read_u32(&mut input)?;
                let ordered = list.last().is_none_or(|prev| prev.doc < doc);
                if u64::from(doc) >= n_docs || tf == 0 || !ordered {
                    return Err(Error::IndexFormat(format!("invalid posting for {term:?}")));
                }
                list.push(Posting { doc, tf });
            }
            terms.push(term);
            postings.push(list);
        }
        let mut trailing = [0u8; 1];
        if input.read(&mut trailing)? != 0 {
            return Err(Error::IndexFormat("trailing bytes".into()));
        }
        Ok(Index::assemble(doc_ids, doc_lengths, terms, postings))
    }
}

fn write_bytes<W: Write>(out: &mut W, bytes: &[u8]) -> Result<()> {
    let len = u32::try_from(bytes.len())
        .map_err(|_| Error::IndexFormat("string longer than u32::MAX bytes".into()))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(bytes)?;
    Ok(())
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<()> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::IndexFormat("truncated file".into()),
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(input, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    read_exact(input, &mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_string<R: Read>(input: &mut R) -> Result<String> {
    let len = u64::from(read_u32(input)?);
    let mut buf = Vec::new();
    input.by_ref().take(len).read_to_end(&mut buf)?;
    if buf.len() as u64 != len {
        return Err(Error::IndexFormat("truncated file".into()));
    }
    String::from_utf8(buf).map_err(|_| Error::IndexFormat("invalid UTF-8 string".into()))
}

/// Rank the index for one query.
pub fn bm25_search(
    index: &Index,
    query_id: &str,
    query_text: &str,
    params: &Bm25Params,
    k: usize,
) -> RankedList {
    RankedList::from_scored(query_id, index.search(query_text, params, k))
}

/// Rank every query in parallel. Queries with no matching document are left
/// out of the run.
pub fn search_all(index: &Index, queries: &QuerySet, params: &Bm25Params, k: usize) -> Run {
    let lists: Vec<RankedList> = queries
        .entries()
        .par_iter()
        .map(|(qid, text)| bm25_search(index, qid, text, params, k))
        .collect();
    let mut run = Run::new(RUN_TAG);
    for list in lists.into_iter().filter(|l| !l.is_empty()) {
        run.insert(list);
    }
    run
}
