//! TREC run files: `qid Q0 docid rank score tag`, one entry per line.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::str::FromStr;

use log::{info, warn};

use crate::corpus::{GenderMagnitude, MagnitudeTable, Measure, TfMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
}

/// One query's ranking; ranks run 1..=n in order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<RunEntry>,
}

impl RankedList {
    /// Build a list from `(doc_id, score)` pairs already in rank order.
    pub fn from_scored<I, S>(query_id: impl Into<String>, docs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let entries = docs
            .into_iter()
            .zip(1u32..)
            .map(|((doc_id, score), rank)| RunEntry {
                doc_id: doc_id.into(),
                rank,
                score,
            })
            .collect();
        RankedList {
            query_id: query_id.into(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The first `min(t, len)` entries.
    pub fn truncate(&self, t: usize) -> RankedList {
        assert!(t >= 1, "cutoff must be positive");
        RankedList {
            query_id: self.query_id.clone(),
            entries: self.entries.iter().take(t).cloned().collect(),
        }
    }
}

/// Free-function form of [`RankedList::truncate`].
pub fn truncate(list: &RankedList, t: usize) -> RankedList {
    list.truncate(t)
}

/// A model's rankings, keyed by query id.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub model_tag: String,
    pub lists: BTreeMap<String, RankedList>,
}

impl Run {
    pub fn new(model_tag: impl Into<String>) -> Self {
        Run {
            model_tag: model_tag.into(),
            lists: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, list: RankedList) {
        self.lists.insert(list.query_id.clone(), list);
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.lists.keys().map(String::as_str)
    }

    /// Serialize in TREC format, queries in id order. Scores use the shortest
    /// representation that reads back exactly.
    pub fn write_trec<W: Write>(&self, mut out: W) -> Result<()> {
        for list in self.lists.values() {
            for e in &list.entries {
                writeln!(
                    out,
                    "{} Q0 {} {} {} {}",
                    list.query_id, e.doc_id, e.rank, e.score, self.model_tag
                )?;
            }
        }
        Ok(())
    }
}

/// Handling of rank gaps within a query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RankMode {
    /// Ranks must be exactly 1..=n.
    #[default]
    Strict,
    /// Entries are ordered by their stated rank and renumbered 1..=n.
    Lenient,
}

struct RawEntry {
    doc_id: String,
    rank: u32,
    score: f64,
    line: usize,
}

/// Parse a TREC run file. Blank lines are skipped; all other lines need six
/// whitespace-separated fields and the same tag.
pub fn parse_trec_run<R: BufRead>(reader: R, mode: RankMode) -> Result<Run> {
    let mut tag: Option<String> = None;
    let mut grouped: BTreeMap<String, Vec<RawEntry>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _q0, doc_id, rank, score, line_tag] = fields[..] else {
            return Err(Error::parse(
                line_no,
                format!(
                    "expected 6 fields (qid Q0 docid rank score tag), found {}",
                    fields.len()
                ),
            ));
        };
        let rank: u32 = rank
            .parse()
            .ok()
            .filter(|&r| r >= 1)
            .ok_or_else(|| Error::parse(line_no, format!("invalid rank {rank:?}")))?;
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| Error::parse(line_no, format!("invalid score {score:?}")))?;
        match &tag {
            None => tag = Some(line_tag.to_string()),
            Some(t) if t != line_tag => {
                return Err(Error::MixedRunTags {
                    first: t.clone(),
                    other: line_tag.to_string(),
                })
            }
            Some(_) => {}
        }
        if !seen.insert((qid.to_string(), doc_id.to_string())) {
            return Err(Error::DuplicateRunEntry {
                query_id: qid.to_string(),
                doc_id: doc_id.to_string(),
            });
        }
        grouped.entry(qid.to_string()).or_default().push(RawEntry {
            doc_id: doc_id.to_string(),
            rank,
            score,
            line: line_no,
        });
    }

    let mut run = Run::new(tag.ok_or(Error::EmptyRun)?);
    for (query_id, mut raw) in grouped {
        raw.sort_by_key(|e| (e.rank, e.line));
        let mut entries = Vec::with_capacity(raw.len());
        for (expected, e) in (1u32..).zip(raw) {
            if e.rank != expected && mode == RankMode::Strict {
                return Err(Error::NonContiguousRanks {
                    query_id,
                    expected,
                    found: e.rank,
                });
            }
            entries.push(RunEntry {
                doc_id: e.doc_id,
                rank: expected,
                score: e.score,
            });
        }
        if entries.windows(2).any(|w| w[1].score > w[0].score) {
            warn!(
                "run {}: query {query_id} has scores that increase with rank",
                run.model_tag
            );
        }
        run.insert(RankedList { query_id, entries });
    }
    Ok(run)
}

/// What to do with run documents missing from the magnitude table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MissingPolicy {
    #[default]
    Strict,
    /// Drop them and close the rank gaps.
    Skip,
}

impl FromStr for MissingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(MissingPolicy::Strict),
            "skip" => Ok(MissingPolicy::Skip),
            _ => Err(Error::UnknownValue {
                kind: "missing-document policy",
                value: s.to_string(),
            }),
        }
    }
}

/// A run with every document replaced by its magnitude, in rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinedRun {
    pub model_tag: String,
    pub measure: Measure,
    pub tf_mode: Option<TfMode>,
    pub queries: BTreeMap<String, Vec<GenderMagnitude>>,
    /// Documents dropped under [`MissingPolicy::Skip`].
    pub missing: usize,
}

impl JoinedRun {
    pub fn swapped(&self) -> Self {
        JoinedRun {
            model_tag: self.model_tag.clone(),
            measure: self.measure,
            tf_mode: self.tf_mode,
            queries: self
                .queries
                .iter()
                .map(|(q, mags)| (q.clone(), mags.iter().map(|m| m.swapped()).collect()))
                .collect(),
            missing: self.missing,
        }
    }
}

pub fn join_magnitudes(
    run: &Run,
    table: &MagnitudeTable,
    policy: MissingPolicy,
) -> Result<JoinedRun> {
    let mut missing = 0;
    let mut queries = BTreeMap::new();
    for (query_id, list) in &run.lists {
        let mut mags = Vec::with_capacity(list.len());
        for entry in &list.entries {
            match table.get(&entry.doc_id) {
                Some(m) => mags.push(m),
                None if policy == MissingPolicy::Skip => missing += 1,
                None => {
                    return Err(Error::MissingDocument {
                        query_id: query_id.clone(),
                        doc_id: entry.doc_id.clone(),
                    })
                }
            }
        }
        queries.insert(query_id.clone(), mags);
    }
    if missing > 0 {
        info!(
            "run {}: skipped {missing} documents missing from the collection",
            run.model_tag
        );
    }
    Ok(JoinedRun {
        model_tag: run.model_tag.clone(),
        measure: table.measure(),
        tf_mode: table.tf_mode(),
        queries,
        missing,
    })
}
