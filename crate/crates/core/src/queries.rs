//! Query files: `qid<TAB>text`, one query per line.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Queries in file order with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuerySet {
    entries: Vec<(String, String)>,
}

impl QuerySet {
    pub fn new(entries: Vec<(String, String)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (qid, _) in &entries {
            if !seen.insert(qid.as_str()) {
                return Err(Error::DuplicateQuery(qid.clone()));
            }
        }
        Ok(QuerySet { entries })
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() {
                continue;
            }
            let (qid, text) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(idx + 1, "expected qid<TAB>text"))?;
            if qid.is_empty() || qid.chars().any(char::is_whitespace) {
                return Err(Error::parse(idx + 1, format!("invalid query id {qid:?}")));
            }
            entries.push((qid.to_string(), text.to_string()));
        }
        QuerySet::new(entries)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (qid, text) in &self.entries {
            writeln!(out, "{qid}\t{text}")?;
        }
        Ok(())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, qid: &str) -> bool {
        self.entries.iter().any(|(q, _)| q == qid)
    }

    pub fn text(&self, qid: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(q, _)| q == qid)
            .map(|(_, t)| t.as_str())
    }

    /// Keep only queries whose id satisfies `keep`, preserving order.
    pub fn filtered<F: FnMut(&str) -> bool>(&self, mut keep: F) -> QuerySet {
        QuerySet {
            entries: self
                .entries
                .iter()
                .filter(|(q, _)| keep(q))
                .cloned()
                .collect(),
        }
    }
}
