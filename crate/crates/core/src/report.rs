//! Bias reports across models, measures, metrics and cutoffs.
//!
//! A report has one row per `(model, measure, metric, cutoff)`. When a model
//! is mapped to a reference model, its rows carry
//! `delta_vs_reference = value - reference value`, so a positive delta means
//! the model leans further towards male content than its reference.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{MagnitudeTable, Measure, TfMode};
use crate::error::{Error, Result};
use crate::metrics::{audit_run, Cutoff};
use crate::num::format_fixed;
use crate::runs::{join_magnitudes, MissingPolicy, Run};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    RaB,
    ARaB,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::RaB => "RaB",
            Metric::ARaB => "ARaB",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "RaB" => Ok(Metric::RaB),
            "ARaB" => Ok(Metric::ARaB),
            _ => Err(Error::UnknownValue {
                kind: "metric",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub model_tag: String,
    pub measure: Measure,
    pub tf_mode: Option<TfMode>,
    pub metric: Metric,
    pub cutoff: Cutoff,
    pub value: f64,
    pub delta_vs_reference: Option<f64>,
    pub n_queries: usize,
    pub n_excluded: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BiasReport {
    pub rows: Vec<BiasRow>,
}

/// Report serializations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    /// Values rounded to 3 decimals.
    Csv,
    /// A JSON array of rows at full precision.
    Json,
    /// Tab-separated blocks, one per `(measure, metric, cutoff)` panel.
    PlotData,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "plotdata" => Ok(OutputFormat::PlotData),
            _ => Err(Error::UnknownValue {
                kind: "format",
                value: s.to_string(),
            }),
        }
    }
}

/// Audit every run under every magnitude table.
///
/// All runs must cover the same queries, and every reference named in
/// `references` (model → reference model) must be one of the runs. Rows are
/// ordered by run, then table, then metric, then cutoff, following the order
/// of the inputs.
pub fn build_report(
    runs: &[Run],
    tables: &[MagnitudeTable],
    cutoffs: &[Cutoff],
    references: &BTreeMap<String, String>,
    policy: MissingPolicy,
) -> Result<BiasReport> {
    let mut tags = HashSet::new();
    for run in runs {
        if !tags.insert(run.model_tag.as_str()) {
            return Err(Error::DuplicateModel(run.model_tag.clone()));
        }
    }
    for (model, reference) in references {
        if !tags.contains(model.as_str()) || !tags.contains(reference.as_str()) {
            return Err(Error::MissingReference {
                model: model.clone(),
                reference: reference.clone(),
            });
        }
    }
    if let Some((first, rest)) = runs.split_first() {
        let expected: BTreeSet<&str> = first.query_ids().collect();
        for run in rest {
            let found: BTreeSet<&str> = run.query_ids().collect();
            if found != expected {
                return Err(Error::QuerySetMismatch {
                    first: first.model_tag.clone(),
                    other: run.model_tag.clone(),
                    only_first: expected.difference(&found).map(|s| s.to_string()).collect(),
                    only_other: found.difference(&expected).map(|s| s.to_string()).collect(),
                });
            }
        }
    }

    let mut rows = Vec::new();
    for run in runs {
        for table in tables {
            let joined = join_magnitudes(run, table, policy)?;
            let audit = audit_run(&joined, cutoffs)?;
            for metric in [Metric::RaB, Metric::ARaB] {
                for model in &audit.models {
                    rows.push(BiasRow {
                        model_tag: run.model_tag.clone(),
                        measure: table.measure(),
                        tf_mode: table.tf_mode(),
                        metric,
                        cutoff: model.cutoff,
                        value: match metric {
                            Metric::RaB => model.rab,
                            Metric::ARaB => model.arab,
                        },
                        delta_vs_reference: None,
                        n_queries: model.n_queries,
                        n_excluded: audit.excluded.len(),
                    });
                }
            }
        }
    }

    let values: HashMap<(String, Measure, Metric, Cutoff), f64> = rows
        .iter()
        .map(|r| {
            (
                (r.model_tag.clone(), r.measure, r.metric, r.cutoff),
                r.value,
            )
        })
        .collect();
    for row in &mut rows {
        if let Some(reference) = references.get(&row.model_tag) {
            let key = (reference.clone(), row.measure, row.metric, row.cutoff);
            row.delta_vs_reference = values.get(&key).map(|v| row.value - v);
        }
    }
    Ok(BiasReport { rows })
}

const CSV_SIGN_NOTE: &str = "# delta_vs_reference = value - reference value; \
positive means more male-leaning than the reference";

const CSV_COLUMNS: [&str; 9] = [
    "model_tag",
    "measure",
    "tf_mode",
    "metric",
    "cutoff",
    "value",
    "delta_vs_reference",
    "n_queries",
    "n_excluded",
];

impl BiasReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn emit<W: Write>(&self, format: OutputFormat, mut out: W) -> Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(out),
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut out, self)?;
                writeln!(out)?;
                Ok(())
            }
            OutputFormat::PlotData => self.write_plotdata(out),
        }
    }

    fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_SIGN_NOTE}")?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(CSV_COLUMNS)?;
        for r in &self.rows {
            writer.write_record([
                r.model_tag.clone(),
                r.measure.to_string(),
                r.tf_mode.map(|m| m.to_string()).unwrap_or_default(),
                r.metric.to_string(),
                r.cutoff.to_string(),
                format_fixed(r.value, 3),
                r.delta_vs_reference
                    .map(|d| format_fixed(d, 3))
                    .unwrap_or_default(),
                r.n_queries.to_string(),
                r.n_excluded.to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }

    fn write_plotdata<W: Write>(&self, mut out: W) -> Result<()> {
        let mut panels: Vec<(Measure, Option<TfMode>, Metric, Cutoff)> = Vec::new();
        for r in &self.rows {
            let key = (r.measure, r.tf_mode, r.metric, r.cutoff);
            if !panels.contains(&key) {
                panels.push(key);
            }
        }
        for (i, &(measure, tf_mode, metric, cutoff)) in panels.iter().enumerate() {
            if i > 0 {
                writeln!(out)?;
            }
            write!(out, "# panel measure={measure}")?;
            if let Some(mode) = tf_mode {
                write!(out, " tf_mode={mode}")?;
            }
            writeln!(out, " metric={metric} cutoff={cutoff}")?;
            writeln!(out, "model_tag\tvalue\tdelta_vs_reference")?;
            for r in self.rows.iter().filter(|r| {
                (r.measure, r.tf_mode, r.metric, r.cutoff) == (measure, tf_mode, metric, cutoff)
            }) {
                let delta = r
                    .delta_vs_reference
                    .map_or_else(|| "NA".to_string(), |d| d.to_string());
                writeln!(out, "{}\t{}\t{delta}", r.model_tag, r.value)?;
            }
        }
        Ok(())
    }

    /// Read a report written in the CSV format. Values come back at the
    /// 3-decimal precision they were written with.
    pub fn from_csv<R: Read>(reader: R) -> Result<BiasReport> {
        let mut csv = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(reader);
        if csv.headers()?.iter().collect::<Vec<_>>() != CSV_COLUMNS {
            return Err(Error::parse(2, "unexpected report header"));
        }
        let mut rows = Vec::new();
        for record in csv.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let field = |i: usize| record.get(i).unwrap_or_default();
            let number = |i: usize| -> Result<f64> {
                field(i)
                    .parse()
                    .map_err(|_| Error::parse(line, format!("invalid number {:?}", field(i))))
            };
            let count = |i: usize| -> Result<usize> {
                field(i)
                    .parse()
                    .map_err(|_| Error::parse(line, format!("invalid count {:?}", field(i))))
            };
            rows.push(BiasRow {
                model_tag: field(0).to_string(),
                measure: field(1).parse()?,
                tf_mode: match field(2) {
                    "" => None,
                    s => Some(s.parse()?),
                },
                metric: field(3).parse()?,
                cutoff: field(4).parse()?,
                value: number(5)?,
                delta_vs_reference: match field(6) {
                    "" => None,
                    _ => Some(number(6)?),
                },
                n_queries: count(7)?,
                n_excluded: count(8)?,
            });
        }
        Ok(BiasReport { rows })
    }

    pub fn from_json<R: Read>(reader: R) -> Result<BiasReport> {
        Ok(serde_json::from_reader(reader)?)
    }
}

/// Relevance judgments: the relevant documents of each query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    relevant: BTreeMap<String, HashSet<String>>,
}

impl Qrels {
    /// Parse `qid iter docid relevance` lines; relevance above 0 is relevant.
    /// Queries listed only with non-positive grades get an empty entry.
    pub fn parse<R: BufRead>(reader: R) -> Result<Qrels> {
        let mut relevant: BTreeMap<String, HashSet<String>> = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [qid, _iter, doc_id, grade] = fields[..] else {
                return Err(Error::parse(idx + 1, "expected qid iter docid relevance"));
            };
            let grade: i32 = grade
                .parse()
                .map_err(|_| Error::parse(idx + 1, format!("invalid relevance {grade:?}")))?;
            let docs = relevant.entry(qid.to_string()).or_default();
            if grade > 0 {
                docs.insert(doc_id.to_string());
            }
        }
        Ok(Qrels { relevant })
    }

    pub fn relevant(&self, query_id: &str) -> Option<&HashSet<String>> {
        self.relevant.get(query_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalQuality {
    pub mrr: f64,
    pub recall: f64,
    pub n_queries: usize,
    /// Run queries without any relevant document in the qrels.
    pub n_excluded: usize,
}

/// MRR and recall at `cutoff`, averaged over the run's queries that have
/// at least one relevant document.
pub fn mrr_recall(run: &Run, qrels: &Qrels, cutoff: Cutoff) -> Result<RetrievalQuality> {
    let mut rr_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut n = 0usize;
    let mut excluded = 0usize;
    for (qid, list) in &run.lists {
        let relevant = match qrels.relevant(qid) {
            Some(r) if !r.is_empty() => r,
            _ => {
                excluded += 1;
                continue;
            }
        };
        let top = &list.entries[..cutoff.get().min(list.len())];
        if let Some(pos) = top.iter().position(|e| relevant.contains(&e.doc_id)) {
            rr_sum += 1.0 / (pos + 1) as f64;
        }
        let hits = top.iter().filter(|e| relevant.contains(&e.doc_id)).count();
        recall_sum += hits as f64 / relevant.len() as f64;
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoQueries(run.model_tag.clone()));
    }
    Ok(RetrievalQuality {
        mrr: rr_sum / n as f64,
        recall: recall_sum / n as f64,
        n_queries: n,
        n_excluded: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::GenderMagnitude;
    use crate::runs::{parse_trec_run, RankMode, RankedList};

    fn t(n: usize) -> Cutoff {
        Cutoff::new(n).unwrap()
    }

    fn run(tag: &str, lists: &[(&str, &[&str])]) -> Run {
        let mut run = Run::new(tag);
        for (qid, docs) in lists {
            run.insert(RankedList::from_scored(
                *qid,
                docs.iter().enumerate().map(|(i, d)| (*d, -(i as f64))),
            ));
        }
        run
    }

    fn bool_table() -> MagnitudeTable {
        let mut table = MagnitudeTable::new(Measure::Boolean, TfMode::Smoothed);
        for (id, f, m) in [("f", 1.0, 0.0), ("m", 0.0, 1.0), ("n", 0.0, 0.0)] {
            table.insert(id.into(), GenderMagnitude::new(f, m)).unwrap();
        }
        table
    }

    #[test]
    fn delta_against_reference() {
        // a: q1 = [m, n, n] -> RaB@3 = 1/3, q2 = [n, n, n] -> 0 => model 1/6
        // b: q1 = [m, n, f] -> 0, q2 = [n, f, n] -> -1/3 => model -1/6
        let a = run(
            "a",
            &[("q1", &["m", "n", "n2"]), ("q2", &["n", "n2", "n3"])],
        );
        let b = run("b", &[("q1", &["m", "n", "f"]), ("q2", &["n", "f", "n2"])]);
        let mut table = bool_table();
        for id in ["n2", "n3"] {
            table.insert(id.into(), GenderMagnitude::default()).unwrap();
        }
        let refs = BTreeMap::from([("b".to_string(), "a".to_string())]);
        let report =
            build_report(&[a, b], &[table], &[t(3)], &refs, MissingPolicy::Strict).unwrap();
        assert_eq!(report.rows.len(), 4);
        let rab_b = report
            .rows
            .iter()
            .find(|r| r.model_tag == "b" && r.metric == Metric::RaB)
            .unwrap();
        assert!((rab_b.delta_vs_reference.unwrap() - (-1.0 / 6.0 - 1.0 / 6.0)).abs() < 1e-15);
        assert!(report
            .rows
            .iter()
            .filter(|r| r.model_tag == "a")
            .all(|r| r.delta_vs_reference.is_none()));
    }

    #[test]
    fn identical_reference_gives_zero_delta() {
        let a = run("a", &[("q1", &["m", "f", "n"])]);
        let mut b = a.clone();
        b.model_tag = "b".into();
        let refs = BTreeMap::from([("b".to_string(), "a".to_string())]);
        let report = build_report(
            &[a, b],
            &[bool_table()],
            &Cutoff::defaults(),
            &refs,
            MissingPolicy::Strict,
        )
        .unwrap();
        for row in report.rows.iter().filter(|r| r.model_tag == "b") {
            assert_eq!(row.delta_vs_reference, Some(0.0));
        }
    }

    #[test]
    fn validation_errors() {
        let a = run("a", &[("q1", &["m"]), ("q2", &["f"])]);
        let b = run("b", &[("q1", &["m"]), ("q3", &["f"])]);
        let err = build_report(
            &[a.clone(), b],
            &[bool_table()],
            &[t(1)],
            &BTreeMap::new(),
            MissingPolicy::Strict,
        )
        .unwrap_err();
        assert_eq!(
            err.to_string(),
            "query sets differ between a and b: only in a: [q2]; only in b: [q3]"
        );

        let refs = BTreeMap::from([("a".to_string(), "rnd".to_string())]);
        assert!(matches!(
            build_report(
                std::slice::from_ref(&a),
                &[bool_table()],
                &[t(1)],
                &refs,
                MissingPolicy::Strict
            ),
            Err(Error::MissingReference { .. })
        ));
        assert!(matches!(
            build_report(
                &[a.clone(), a],
                &[bool_table()],
                &[t(1)],
                &BTreeMap::new(),
                MissingPolicy::Strict
            ),
            Err(Error::DuplicateModel(_))
        ));
    }

    #[test]
    fn empty_report_formats() {
        let empty = BiasReport::default();
        let mut csv = Vec::new();
        empty.emit(OutputFormat::Csv, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().starts_with("model_tag,measure"));
        let mut json = Vec::new();
        empty.emit(OutputFormat::Json, &mut json).unwrap();
        assert_eq!(String::from_utf8(json).unwrap().trim(), "[]");
        assert!("xml".parse::<OutputFormat>().is_err());
    }

    fn sample_row() -> BiasRow {
        BiasRow {
            model_tag: "bm25".into(),
            measure: Measure::Tf,
            tf_mode: Some(TfMode::Smoothed),
            metric: Metric::ARaB,
            cutoff: t(10),
            value: 0.075_812_345_678_9,
            delta_vs_reference: Some(-0.000_2),
            n_queries: 1765,
            n_excluded: 0,
        }
    }

    #[test]
    fn json_round_trip() {
        let report = BiasReport {
            rows: vec![sample_row()],
        };
        let mut json = Vec::new();
        report.emit(OutputFormat::Json, &mut json).unwrap();
        assert_eq!(BiasReport::from_json(&json[..]).unwrap(), report);
    }

    #[test]
    fn csv_rounds_to_three_decimals() {
        let mut bool_row = sample_row();
        bool_row.measure = Measure::Boolean;
        bool_row.tf_mode = None;
        bool_row.delta_vs_reference = None;
        let report = BiasReport {
            rows: vec![sample_row(), bool_row],
        };
        let mut csv = Vec::new();
        report.emit(OutputFormat::Csv, &mut csv).unwrap();
        let text = String::from_utf8(csv.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[2], "bm25,tf,smoothed,ARaB,10,0.076,0.000,1765,0");
        assert_eq!(lines[3], "bm25,bool,,ARaB,10,0.076,,1765,0");

        let parsed = BiasReport::from_csv(&csv[..]).unwrap();
        assert_eq!(parsed.rows[0].value, 0.076);
        assert_eq!(parsed.rows[0].delta_vs_reference, Some(0.0));
        assert_eq!(parsed.rows[1].tf_mode, None);
        assert_eq!(parsed.rows[1].delta_vs_reference, None);
    }

    #[test]
    fn plotdata_groups_panels() {
        let mut other = sample_row();
        other.model_tag = "knrm".into();
        let mut rab = sample_row();
        rab.metric = Metric::RaB;
        rab.delta_vs_reference = None;
        let report = BiasReport {
            rows: vec![sample_row(), rab, other],
        };
        let mut out = Vec::new();
        report.emit(OutputFormat::PlotData, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let expected = "\
# panel measure=tf tf_mode=smoothed metric=ARaB cutoff=10
model_tag\tvalue\tdelta_vs_reference
bm25\t0.0758123456789\t-0.0002
knrm\t0.0758123456789\t-0.0002

# panel measure=tf tf_mode=smoothed metric=RaB cutoff=10
model_tag\tvalue\tdelta_vs_reference
bm25\t0.0758123456789\tNA
";
        assert_eq!(text, expected);
    }

    #[test]
    fn mrr_recall_hand_fixture() {
        let run = parse_trec_run(
            "q1 Q0 r1 1 3 m\nq1 Q0 x 2 2 m\n\
             q2 Q0 x 1 3 m\nq2 Q0 r2 2 2 m\nq2 Q0 r3 3 1 m\n\
             q3 Q0 x 1 1 m\nq3 Q0 y 2 0 m\n\
             q4 Q0 r1 1 1 m\n"
                .as_bytes(),
            RankMode::Strict,
        )
        .unwrap();
        let qrels = Qrels::parse(
            "q1 0 r1 1\nq2 0 r2 1\nq2 0 r3 2\nq2 0 r4 1\nq3 0 r9 1\nq4 0 r1 0\n".as_bytes(),
        )
        .unwrap();
        let quality = mrr_recall(&run, &qrels, t(10)).unwrap();
        assert!((quality.mrr - 0.5).abs() < 1e-12);
        // recall: q1 1/1, q2 2/3, q3 0
        assert!((quality.recall - (1.0 + 2.0 / 3.0) / 3.0).abs() < 1e-12);
        assert_eq!(quality.n_queries, 3);
        assert_eq!(quality.n_excluded, 1);
    }

    #[test]
    fn mrr_extremes() {
        let run = parse_trec_run(
            "q1 Q0 a 1 1 m\nq2 Q0 b 1 1 m\n".as_bytes(),
            RankMode::Strict,
        )
        .unwrap();
        let all = Qrels::parse("q1 0 a 1\nq2 0 b 1\n".as_bytes()).unwrap();
        let q = mrr_recall(&run, &all, t(10)).unwrap();
        assert_eq!((q.mrr, q.recall), (1.0, 1.0));
        let none = Qrels::parse("q1 0 z 1\nq2 0 z 1\n".as_bytes()).unwrap();
        let q = mrr_recall(&run, &none, t(10)).unwrap();
        assert_eq!((q.mrr, q.recall), (0.0, 0.0));
        let uncovered = Qrels::parse("q9 0 z 1\n".as_bytes()).unwrap();
        assert!(mrr_recall(&run, &uncovered, t(10)).is_err());
    }
}
