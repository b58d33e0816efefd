//! Rank bias (`RaB`) and average rank bias (`ARaB`).
//!
//! For one gender, `qRaB@t` is the mean magnitude of the top `t` documents and
//! `qARaB@t` is the mean of `qRaB@1..=t`. A query's bias is the male value
//! minus the female value, and a model's bias is the unweighted mean over
//! queries. When a list is shorter than `t` the denominators use the list
//! length instead; that depth is reported as `effective_depth`.

use std::fmt;
use std::io::{BufRead, Write};
use std::num::NonZeroUsize;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{GenderMagnitude, Measure, TfMode};
use crate::error::{Error, Result};
use crate::lexicon::Gender;
use crate::runs::JoinedRun;

/// A positive ranking cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cutoff(NonZeroUsize);

impl Cutoff {
    /// Cutoffs reported by default.
    pub const DEFAULTS: [usize; 4] = [5, 10, 20, 30];

    pub fn new(t: usize) -> Option<Self> {
        NonZeroUsize::new(t).map(Cutoff)
    }

    pub fn get(self) -> usize {
        self.0.get()
    }

    pub fn defaults() -> Vec<Cutoff> {
        Self::DEFAULTS
            .iter()
            .filter_map(|&t| Cutoff::new(t))
            .collect()
    }
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for Cutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse::<usize>()
            .ok()
            .and_then(Cutoff::new)
            .ok_or_else(|| Error::UnknownValue {
                kind: "cutoff",
                value: s.to_string(),
            })
    }
}

/// Mean of the first `min(t, len)` magnitudes; `None` for an empty list.
pub fn qrab(magnitudes: &[f64], t: Cutoff) -> Option<f64> {
    let k = t.get().min(magnitudes.len());
    if k == 0 {
        return None;
    }
    // fold from +0.0: `Sum` starts at -0.0
    let sum = magnitudes[..k].iter().fold(0.0, |acc, m| acc + m);
    Some(sum / k as f64)
}

/// Mean of `qrab` at every cutoff `1..=min(t, len)`; `None` for an empty list.
pub fn qarab(magnitudes: &[f64], t: Cutoff) -> Option<f64> {
    let k = t.get().min(magnitudes.len());
    if k == 0 {
        return None;
    }
    let mut prefix = 0.0;
    let mut acc = 0.0;
    for (i, m) in magnitudes[..k].iter().enumerate() {
        prefix += m;
        acc += prefix / (i + 1) as f64;
    }
    Some(acc / k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryBias {
    pub query_id: String,
    pub cutoff: Cutoff,
    pub qrab_female: f64,
    pub qrab_male: f64,
    pub qarab_female: f64,
    pub qarab_male: f64,
    pub rab: f64,
    pub arab: f64,
    pub effective_depth: usize,
}

/// Bias of one query's ranking at cutoff `t`. Positive values lean male.
///
/// Returns `None` for an empty list; such queries are excluded from model means.
pub fn query_bias(query_id: &str, magnitudes: &[GenderMagnitude], t: Cutoff) -> Option<QueryBias> {
    if magnitudes.is_empty() {
        return None;
    }
    let side = |g: Gender| -> Vec<f64> { magnitudes.iter().map(|m| m.get(g)).collect() };
    let female = side(Gender::Female);
    let male = side(Gender::Male);
    let qrab_female = qrab(&female, t)?;
    let qrab_male = qrab(&male, t)?;
    let qarab_female = qarab(&female, t)?;
    let qarab_male = qarab(&male, t)?;
    Some(QueryBias {
        query_id: query_id.to_string(),
        cutoff: t,
        qrab_female,
        qrab_male,
        qarab_female,
        qarab_male,
        rab: qrab_male - qrab_female,
        arab: qarab_male - qarab_female,
        effective_depth: t.get().min(magnitudes.len()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBias {
    pub model_tag: String,
    pub measure: Measure,
    pub tf_mode: Option<TfMode>,
    pub cutoff: Cutoff,
    pub rab: f64,
    pub arab: f64,
    pub n_queries: usize,
}

/// Unweighted mean of per-query biases, summed in query id order.
pub fn model_bias(
    model_tag: &str,
    measure: Measure,
    tf_mode: Option<TfMode>,
    cutoff: Cutoff,
    biases: &[QueryBias],
) -> Result<ModelBias> {
    if biases.is_empty() {
        return Err(Error::NoQueries(model_tag.to_string()));
    }
    let mut ordered: Vec<&QueryBias> = biases.iter().collect();
    ordered.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    let n = ordered.len() as f64;
    let rab = ordered.iter().fold(0.0, |acc, q| acc + q.rab) / n;
    let arab = ordered.iter().fold(0.0, |acc, q| acc + q.arab) / n;
    Ok(ModelBias {
        model_tag: model_tag.to_string(),
        measure,
        tf_mode,
        cutoff,
        rab,
        arab,
        n_queries: ordered.len(),
    })
}

/// Per-query and model-level bias of one joined run at several cutoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunAudit {
    pub model_tag: String,
    pub measure: Measure,
    pub tf_mode: Option<TfMode>,
    /// Ordered by query id, then cutoff.
    pub per_query: Vec<QueryBias>,
    /// One entry per cutoff, in the order given.
    pub models: Vec<ModelBias>,
    /// Queries whose joined list was empty.
    pub excluded: Vec<String>,
}

impl RunAudit {
    pub fn model(&self, cutoff: Cutoff) -> Option<&ModelBias> {
        self.models.iter().find(|m| m.cutoff == cutoff)
    }

    /// Rows as `qid cutoff measure rab arab effective_depth`, behind a comment
    /// line naming the model. Values are written at full precision.
    pub fn write_per_query_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "# model={} measure={}", self.model_tag, self.measure)?;
        if let Some(mode) = self.tf_mode {
            write!(out, " tf_mode={mode}")?;
        }
        writeln!(out)?;
        writeln!(out, "qid\tcutoff\tmeasure\trab\tarab\teffective_depth")?;
        for q in &self.per_query {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                q.query_id, q.cutoff, self.measure, q.rab, q.arab, q.effective_depth
            )?;
        }
        Ok(())
    }
}

pub fn audit_run(joined: &JoinedRun, cutoffs: &[Cutoff]) -> Result<RunAudit> {
    let mut per_query = Vec::new();
    let mut excluded = Vec::new();
    for (query_id, mags) in &joined.queries {
        if mags.is_empty() {
            excluded.push(query_id.clone());
            continue;
        }
        per_query.extend(
            cutoffs
                .iter()
                .filter_map(|&t| query_bias(query_id, mags, t)),
        );
    }
    let models = cutoffs
        .iter()
        .map(|&t| {
            let at_cutoff: Vec<QueryBias> = per_query
                .iter()
                .filter(|q| q.cutoff == t)
                .cloned()
                .collect();
            model_bias(
                &joined.model_tag,
                joined.measure,
                joined.tf_mode,
                t,
                &at_cutoff,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunAudit {
        model_tag: joined.model_tag.clone(),
        measure: joined.measure,
        tf_mode: joined.tf_mode,
        per_query,
        models,
        excluded,
    })
}

/// One row of a per-query bias file.
#[derive(Debug, Clone, PartialEq)]
pub struct PerQueryRow {
    pub query_id: String,
    pub cutoff: Cutoff,
    pub measure: Measure,
    pub rab: f64,
    pub arab: f64,
    pub effective_depth: usize,
}

/// Read a per-query bias file written by [`RunAudit::write_per_query_tsv`].
/// Several audits of the same model may be concatenated in one file.
pub fn read_per_query_tsv<R: BufRead>(reader: R) -> Result<(String, Vec<PerQueryRow>)> {
    let mut model: Option<String> = None;
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() || line.starts_with("qid\t") {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for pair in comment.split_whitespace() {
                if let Some(tag) = pair.strip_prefix("model=") {
                    match &model {
                        Some(m) if m != tag => {
                            return Err(Error::MixedRunTags {
                                first: m.clone(),
                                other: tag.to_string(),
                            })
                        }
                        _ => model = Some(tag.to_string()),
                    }
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [qid, cutoff, measure, rab, arab, depth] = fields[..] else {
            return Err(Error::parse(line_no, "expected 6 tab-separated fields"));
        };
        let number = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line_no, format!("invalid number {s:?}")))
        };
        rows.push(PerQueryRow {
            query_id: qid.to_string(),
            cutoff: cutoff.parse()?,
            measure: measure.parse()?,
            rab: number(rab)?,
            arab: number(arab)?,
            effective_depth: depth
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid depth {depth:?}")))?,
        });
    }
    let model = model.ok_or_else(|| Error::parse(1, "missing `# model=<tag>` header"))?;
    Ok((model, rows))
}
