//! Document ingestion, tokenization and per-document gender magnitudes.
//!
//! The collection format is the MS MARCO passage TSV: one document per line,
//! `doc_id<TAB>text`. Collections are read as a stream and processed in
//! batches, so only the magnitudes (two floats per document) are retained.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{Gender, GenderLexicon};
use crate::num::format_significant;

/// Documents per parallel batch when streaming a collection.
pub const BATCH_SIZE: usize = 16_384;

/// Lowercase `text` and split it on every non-alphanumeric character.
///
/// No stemming and no stopword removal, so `her` and `hers` stay distinct.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for_each_token(text, |token| tokens.push(token.to_string()));
    tokens
}

/// Visit the tokens of `text` without allocating one string per token.
pub fn for_each_token<F: FnMut(&str)>(text: &str, mut f: F) {
    let lowered = text.to_lowercase();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|token| !token.is_empty())
        .for_each(&mut f);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            text: text.into(),
        }
    }
}

/// Streaming reader over a `doc_id<TAB>text` collection.
pub struct DocumentReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> DocumentReader<R> {
    pub fn new(reader: R) -> Self {
        DocumentReader {
            lines: reader.lines(),
            line_no: 0,
        }
    }
}

impl<R: BufRead> Iterator for DocumentReader<R> {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(err) => return Some(Err(err.into())),
            };
            self.line_no += 1;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() {
                continue;
            }
            return Some(parse_document_line(line, self.line_no));
        }
    }
}

fn parse_document_line(line: &str, line_no: usize) -> Result<Document> {
    let (doc_id, text) = line
        .split_once('\t')
        .ok_or_else(|| Error::parse(line_no, "expected doc_id<TAB>text"))?;
    if doc_id.is_empty() {
        return Err(Error::parse(line_no, "empty document id"));
    }
    if doc_id.chars().any(char::is_whitespace) {
        return Err(Error::parse(
            line_no,
            format!("document id {doc_id:?} contains whitespace"),
        ));
    }
    Ok(Document::new(doc_id, text))
}

/// An in-memory collection with unique document ids, in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(Error::DuplicateDocument(doc.doc_id.clone()));
            }
        }
        Ok(Corpus { documents })
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        Corpus::new(DocumentReader::new(reader).collect::<Result<_>>()?)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// The documents as the fallible stream the batch builders consume.
    pub fn stream(&self) -> impl Iterator<Item = Result<Document>> + '_ {
        self.documents.iter().cloned().map(Ok)
    }
}

/// Per-word occurrence counts of `words` in `text`; absent words are omitted.
pub fn count_lexicon_terms(text: &str, words: &BTreeSet<String>) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    for_each_token(text, |token| {
        if words.contains(token) {
            *counts.entry(token.to_string()).or_insert(0) += 1;
        }
    });
    counts
}

/// Lexicon word counts of one document, for both genders.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LexiconCounts {
    pub female: BTreeMap<String, u32>,
    pub male: BTreeMap<String, u32>,
}

impl LexiconCounts {
    pub fn from_text(text: &str, lexicon: &GenderLexicon) -> Self {
        let mut counts = LexiconCounts::default();
        for_each_token(text, |token| {
            let side = match lexicon.classify(token) {
                Some(Gender::Female) => &mut counts.female,
                Some(Gender::Male) => &mut counts.male,
                None => return,
            };
            *side.entry(token.to_string()).or_insert(0) += 1;
        });
        counts
    }

    pub fn magnitude(&self, measure: Measure, tf_mode: TfMode) -> GenderMagnitude {
        GenderMagnitude {
            female: side_magnitude(&self.female, measure, tf_mode),
            male: side_magnitude(&self.male, measure, tf_mode),
        }
    }
}

fn side_magnitude(counts: &BTreeMap<String, u32>, measure: Measure, tf_mode: TfMode) -> f64 {
    match measure {
        Measure::Boolean => {
            if counts.values().any(|&c| c > 0) {
                1.0
            } else {
                0.0
            }
        }
        Measure::Tf => counts
            .values()
            .filter(|&&c| c > 0)
            .map(|&c| match tf_mode {
                TfMode::Smoothed => (f64::from(c) + 1.0).ln(),
                TfMode::PaperLiteral => f64::from(c).ln(),
            })
            .fold(0.0, |acc, x| acc + x),
    }
}

/// How a document's gender magnitude is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    /// Sum of log occurrence counts of the definitional words.
    #[serde(rename = "tf")]
    Tf,
    /// 1 if any definitional word occurs, else 0.
    #[serde(rename = "bool")]
    Boolean,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Tf => "tf",
            Measure::Boolean => "bool",
        })
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tf" => Ok(Measure::Tf),
            "bool" | "boolean" => Ok(Measure::Boolean),
            _ => Err(Error::UnknownValue {
                kind: "measure",
                value: s.to_string(),
            }),
        }
    }
}

/// Log transform used by the TF measure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfMode {
    /// `ln(1 + count)` per word: total, and positive whenever a word occurs.
    #[default]
    Smoothed,
    /// `ln(count)` over occurring words: a word seen once contributes 0.
    PaperLiteral,
}

impl fmt::Display for TfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TfMode::Smoothed => "smoothed",
            TfMode::PaperLiteral => "paper_literal",
        })
    }
}

impl FromStr for TfMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoothed" => Ok(TfMode::Smoothed),
            "paper_literal" => Ok(TfMode::PaperLiteral),
            _ => Err(Error::UnknownValue {
                kind: "tf mode",
                value: s.to_string(),
            }),
        }
    }
}

/// Female and male magnitude of one document.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GenderMagnitude {
    pub female: f64,
    pub male: f64,
}

impl GenderMagnitude {
    pub fn new(female: f64, male: f64) -> Self {
        GenderMagnitude { female, male }
    }

    pub fn get(&self, gender: Gender) -> f64 {
        match gender {
            Gender::Female => self.female,
            Gender::Male => self.male,
        }
    }

    pub fn swapped(self) -> Self {
        GenderMagnitude {
            female: self.male,
            male: self.female,
        }
    }
}

/// Gender magnitude of a single document.
///
/// `tf_mode` only matters for [`Measure::Tf`].
pub fn magnitude(
    doc: &Document,
    lexicon: &GenderLexicon,
    measure: Measure,
    tf_mode: TfMode,
) -> GenderMagnitude {
    LexiconCounts::from_text(&doc.text, lexicon).magnitude(measure, tf_mode)
}

/// Magnitudes of every document of a collection under one measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeTable {
    measure: Measure,
    tf_mode: Option<TfMode>,
    entries: BTreeMap<String, GenderMagnitude>,
}

impl MagnitudeTable {
    pub fn new(measure: Measure, tf_mode: TfMode) -> Self {
        MagnitudeTable {
            measure,
            tf_mode: (measure == Measure::Tf).then_some(tf_mode),
            entries: BTreeMap::new(),
        }
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    /// The TF mode, or `None` for the Boolean measure.
    pub fn tf_mode(&self) -> Option<TfMode> {
        self.tf_mode
    }

    pub fn insert(&mut self, doc_id: String, value: GenderMagnitude) -> Result<()> {
        use std::collections::btree_map::Entry;
        match self.entries.entry(doc_id) {
            Entry::Occupied(e) => Err(Error::DuplicateDocument(e.key().clone())),
            Entry::Vacant(e) => {
                e.insert(value);
                Ok(())
            }
        }
    }

    pub fn get(&self, doc_id: &str) -> Option<GenderMagnitude> {
        self.entries.get(doc_id).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in doc_id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, GenderMagnitude)> {
        self.entries.iter().map(|(id, m)| (id.as_str(), *m))
    }

    pub fn swapped(&self) -> Self {
        MagnitudeTable {
            measure: self.measure,
            tf_mode: self.tf_mode,
            entries: self
                .entries
                .iter()
                .map(|(id, m)| (id.clone(), m.swapped()))
                .collect(),
        }
    }

    /// Write the table as `doc_id<TAB>female<TAB>male` behind a one-line header
    /// comment carrying the measure and TF mode. Floats keep 9 significant digits.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "# rankbias magnitudes measure={}", self.measure)?;
        if let Some(mode) = self.tf_mode {
            write!(out, " tf_mode={mode}")?;
        }
        writeln!(out, " version={}", env!("CARGO_PKG_VERSION"))?;
        for (doc_id, m) in &self.entries {
            writeln!(
                out,
                "{doc_id}\t{}\t{}",
                format_significant(m.female, 9),
                format_significant(m.male, 9)
            )?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::MagnitudeFormat("missing header line".into()))?;
        let (measure, tf_mode) = parse_table_header(&header)?;
        let mut table = MagnitudeTable::new(measure, tf_mode);
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(line_no, "expected doc_id<TAB>female<TAB>male"));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| Error::parse(line_no, format!("invalid magnitude {s:?}")))
            };
            let value = GenderMagnitude::new(parse(fields[1])?, parse(fields[2])?);
            table.insert(fields[0].to_string(), value)?;
        }
        Ok(table)
    }
}

fn parse_table_header(header: &str) -> Result<(Measure, TfMode)> {
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| Error::MagnitudeFormat("first line must be a # header".into()))?;
    let mut measure = None;
    let mut tf_mode = None;
    for pair in body.split_whitespace() {
        match pair.split_once('=') {
            Some(("measure", v)) => measure = Some(v.parse::<Measure>()?),
            Some(("tf_mode", v)) => tf_mode = Some(v.parse::<TfMode>()?),
            _ => {}
        }
    }
    let measure =
        measure.ok_or_else(|| Error::MagnitudeFormat("header does not name a measure".into()))?;
    if measure == Measure::Tf && tf_mode.is_none() {
        return Err(Error::MagnitudeFormat(
            "TF table header does not name a tf_mode".into(),
        ));
    }
    Ok((measure, tf_mode.unwrap_or_default()))
}

/// Magnitude table of a document stream under one measure.
///
/// Rejects duplicate document ids. Documents are processed in parallel
/// batches; the result does not depend on the schedule.
pub fn compute_magnitude_table<I>(
    documents: I,
    lexicon: &GenderLexicon,
    measure: Measure,
    tf_mode: TfMode,
) -> Result<MagnitudeTable>
where
    I: IntoIterator<Item = Result<Document>>,
{
    let mut tables = compute_magnitude_tables(documents, lexicon, &[measure], tf_mode)?;
    Ok(tables.remove(0))
}

/// One table per requested measure from a single pass over the documents.
pub fn compute_magnitude_tables<I>(
    documents: I,
    lexicon: &GenderLexicon,
    measures: &[Measure],
    tf_mode: TfMode,
) -> Result<Vec<MagnitudeTable>>
where
    I: IntoIterator<Item = Result<Document>>,
{
    let mut tables: Vec<MagnitudeTable> = measures
        .iter()
        .map(|&m| MagnitudeTable::new(m, tf_mode))
        .collect();
    let mut documents = documents.into_iter();
    loop {
        let batch = documents
            .by_ref()
            .take(BATCH_SIZE)
            .collect::<Result<Vec<_>>>()?;
        if batch.is_empty() {
            break;
        }
        let counted: Vec<(String, LexiconCounts)> = batch
            .into_par_iter()
            .map(|doc| {
                let counts = LexiconCounts::from_text(&doc.text, lexicon);
                (doc.doc_id, counts)
            })
            .collect();
        for (doc_id, counts) in counted {
            for table in &mut tables {
                let value = counts.magnitude(table.measure, tf_mode);
                table.insert(doc_id.clone(), value)?;
            }
        }
    }
    Ok(tables)
}
