//! Annotation candidate pooling and label aggregation.
//!
//! Candidates are the queries each model pushes furthest towards either
//! gender: per model, queries are sorted by `RaB@10` once ascending (female
//! leaning first) and once descending (male leaning first), the top `depth`
//! of every list are unioned, and the union is handed to annotators. Their
//! labels are reduced by strict majority vote; queries without one are
//! dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{MagnitudeTable, Measure, TfMode};
use crate::error::{Error, Result};
use crate::metrics::{audit_run, Cutoff};
use crate::queries::QuerySet;
use crate::runs::{join_magnitudes, MissingPolicy, Run};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    NonGendered,
    Female,
    Male,
    OtherOrMultiple,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::NonGendered,
        Category::Female,
        Category::Male,
        Category::OtherOrMultiple,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::NonGendered => "non_gendered",
            Category::Female => "female",
            Category::Male => "male",
            Category::OtherOrMultiple => "other_or_multiple",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownValue {
                kind: "category",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryLabel {
    pub query_id: String,
    pub category: Category,
    /// Votes per category, indexed in [`Category::ALL`] order.
    pub vote_counts: [u32; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSpec {
    pub depth: usize,
    pub bias_cutoff: Cutoff,
    pub tf_mode: TfMode,
}

impl Default for PoolSpec {
    fn default() -> Self {
        PoolSpec {
            depth: 500,
            bias_cutoff: Cutoff::new(10).expect("nonzero"),
            tf_mode: TfMode::Smoothed,
        }
    }
}

/// Per-query `RaB` of one model at the pooling cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelQueryBias {
    pub model_tag: String,
    pub rab: BTreeMap<String, f64>,
}

/// `RaB` at `spec.bias_cutoff` for every model/query pair, using TF magnitudes.
pub fn per_query_bias_for_pooling(
    runs: &[Run],
    table: &MagnitudeTable,
    spec: &PoolSpec,
    policy: MissingPolicy,
) -> Result<Vec<ModelQueryBias>> {
    if table.measure() != Measure::Tf || table.tf_mode() != Some(spec.tf_mode) {
        let found = match table.tf_mode() {
            Some(mode) => format!("{} ({mode})", table.measure()),
            None => table.measure().to_string(),
        };
        return Err(Error::MeasureMismatch {
            expected: format!("tf ({})", spec.tf_mode),
            found,
        });
    }
    runs.iter()
        .map(|run| {
            let joined = join_magnitudes(run, table, policy)?;
            let audit = audit_run(&joined, &[spec.bias_cutoff])?;
            Ok(ModelQueryBias {
                model_tag: run.model_tag.clone(),
                rab: audit
                    .per_query
                    .into_iter()
                    .map(|q| (q.query_id, q.rab))
                    .collect(),
            })
        })
        .collect()
}

/// Union of the top `depth` female- and male-leaning queries of every model,
/// in query id order. Equal bias values are ordered by query id.
pub fn pool_queries(tables: &[ModelQueryBias], depth: usize) -> Vec<String> {
    let mut pooled = BTreeSet::new();
    for table in tables {
        let mut entries: Vec<(&str, f64)> =
            table.rab.iter().map(|(q, &v)| (q.as_str(), v)).collect();
        entries.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        pooled.extend(entries.iter().take(depth).map(|(q, _)| q.to_string()));
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        pooled.extend(entries.iter().take(depth).map(|(q, _)| q.to_string()));
    }
    pooled.into_iter().collect()
}

/// Pool output: `qid<TAB>query_text` for each pooled query, in id order.
pub fn write_pool<W: Write>(pooled: &[String], queries: &QuerySet, mut out: W) -> Result<()> {
    for qid in pooled {
        let text = queries
            .text(qid)
            .ok_or_else(|| Error::UnknownQuery(qid.clone()))?;
        writeln!(out, "{qid}\t{text}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Aggregation {
    /// Queries with a strict majority, in id order.
    pub labels: Vec<QueryLabel>,
    /// Queries without one, in id order.
    pub dropped: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct AnnotationRecord {
    query_id: String,
    annotator_id: String,
    category: String,
}

/// Majority-vote annotation CSV rows (`query_id,annotator_id,category`).
///
/// Every query needs exactly `annotators` annotations from distinct
/// annotators; a category wins with more than half of the votes.
pub fn aggregate_labels<R: Read>(reader: R, annotators: usize) -> Result<Aggregation> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["query_id", "annotator_id", "category"] {
        return Err(Error::parse(
            1,
            "expected header query_id,annotator_id,category",
        ));
    }
    let mut votes: BTreeMap<String, BTreeMap<String, Category>> = BTreeMap::new();
    for raw in csv.records() {
        let raw = raw?;
        let line = raw.position().map_or(0, |p| p.line() as usize);
        let record: AnnotationRecord = raw.deserialize(Some(&headers))?;
        let category: Category = record
            .category
            .parse()
            .map_err(|_| Error::parse(line, format!("unknown category {:?}", record.category)))?;
        let per_query = votes.entry(record.query_id.clone()).or_default();
        if per_query
            .insert(record.annotator_id.clone(), category)
            .is_some()
        {
            return Err(Error::DuplicateAnnotation {
                query_id: record.query_id,
                annotator_id: record.annotator_id,
            });
        }
    }

    let mut result = Aggregation::default();
    for (query_id, by_annotator) in votes {
        if by_annotator.len() != annotators {
            return Err(Error::AnnotationCount {
                query_id,
                expected: annotators,
                found: by_annotator.len(),
            });
        }
        let mut counts = [0u32; 4];
        for category in by_annotator.values() {
            counts[category.slot()] += 1;
        }
        let winner = Category::ALL
            .into_iter()
            .find(|c| counts[c.slot()] as usize * 2 > annotators);
        match winner {
            Some(category) => result.labels.push(QueryLabel {
                query_id,
                category,
                vote_counts: counts,
            }),
            None => result.dropped.push(query_id),
        }
    }
    Ok(result)
}

const LABEL_HEADER: &str = "qid\tcategory\tnon_gendered\tfemale\tmale\tother_or_multiple";

/// Labels as TSV with one vote-count column per category.
pub fn write_labels<W: Write>(labels: &[QueryLabel], mut out: W) -> Result<()> {
    writeln!(out, "{LABEL_HEADER}")?;
    for l in labels {
        let [a, b, c, d] = l.vote_counts;
        writeln!(out, "{}\t{}\t{a}\t{b}\t{c}\t{d}", l.query_id, l.category)?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(reader: R) -> Result<Vec<QueryLabel>> {
    let mut labels = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() || line == LABEL_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (qid, category, counts) = match fields[..] {
            [qid, category] => (qid, category, None),
            [qid, category, ref rest @ ..] if rest.len() == 4 => (qid, category, Some(rest)),
            _ => {
                return Err(Error::parse(
                    line_no,
                    "expected qid<TAB>category[<TAB>votes x4]",
                ))
            }
        };
        let category: Category = category
            .parse()
            .map_err(|_| Error::parse(line_no, format!("unknown category {category:?}")))?;
        let mut vote_counts = [0u32; 4];
        if let Some(counts) = counts {
            for (slot, v) in vote_counts.iter_mut().zip(counts) {
                *slot = v
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("invalid vote count {v:?}")))?;
            }
        }
        labels.push(QueryLabel {
            query_id: qid.to_string(),
            category,
            vote_counts,
        });
    }
    Ok(labels)
}

/// The queries labeled non-gendered, in their original order and text.
pub fn filter_non_gendered(labels: &[QueryLabel], queries: &QuerySet) -> Result<QuerySet> {
    let mut keep = BTreeSet::new();
    for label in labels {
        if !queries.contains(&label.query_id) {
            return Err(Error::UnknownQuery(label.query_id.clone()));
        }
        if label.category == Category::NonGendered {
            keep.insert(label.query_id.as_str());
        }
    }
    Ok(queries.filtered(|q| keep.contains(q)))
}
