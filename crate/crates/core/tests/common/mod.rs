#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use rankbias::corpus::compute_magnitude_tables;
use rankbias::lexicon::load_lexicon;
use rankbias::metrics::Cutoff;
use rankbias::report::{build_report, OutputFormat};
use rankbias::retrieval::{build_index, search_all};
use rankbias::runs::parse_trec_run;
use rankbias::{
    BiasReport, Bm25Params, Corpus, GenderLexicon, MagnitudeTable, Measure, MissingPolicy,
    QuerySet, RankMode, Run, TfMode,
};

/// Depth of the BM25 run in the fixture pipeline.
pub const FIXTURE_DEPTH: usize = 30;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn open(rel: &str) -> BufReader<File> {
    let path = fixture(rel);
    BufReader::new(File::open(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
}

pub fn corpus() -> Corpus {
    Corpus::from_reader(open("collection.tsv")).unwrap()
}

pub fn queries() -> QuerySet {
    QuerySet::read_tsv(open("queries.tsv")).unwrap()
}

pub fn lexicon() -> GenderLexicon {
    load_lexicon(open("lexicon/female.txt"), open("lexicon/male.txt")).unwrap()
}

/// The lexicon loaded with the two files exchanged.
pub fn swapped_lexicon() -> GenderLexicon {
    load_lexicon(open("lexicon/male.txt"), open("lexicon/female.txt")).unwrap()
}

pub fn bm25_run() -> Run {
    let index = build_index(&corpus()).unwrap();
    search_all(&index, &queries(), &Bm25Params::default(), FIXTURE_DEPTH)
}

pub fn rerank_run() -> Run {
    parse_trec_run(open("runs/rerank.trec"), RankMode::Strict).unwrap()
}

pub fn tables(lexicon: &GenderLexicon) -> Vec<MagnitudeTable> {
    compute_magnitude_tables(
        corpus().stream(),
        lexicon,
        &[Measure::Tf, Measure::Boolean],
        TfMode::Smoothed,
    )
    .unwrap()
}

pub fn fixture_report(lexicon: &GenderLexicon) -> BiasReport {
    let references = BTreeMap::from([("rerank".to_string(), "bm25".to_string())]);
    build_report(
        &[bm25_run(), rerank_run()],
        &tables(lexicon),
        &Cutoff::defaults(),
        &references,
        MissingPolicy::Strict,
    )
    .unwrap()
}

pub fn render(report: &BiasReport, format: OutputFormat) -> Vec<u8> {
    let mut out = Vec::new();
    report.emit(format, &mut out).unwrap();
    out
}

pub fn render_run(run: &Run) -> Vec<u8> {
    let mut out = Vec::new();
    run.write_trec(&mut out).unwrap();
    out
}

/// Compare against a checked-in golden file, or rewrite it when
/// `RANKBIAS_BLESS` is set.
pub fn matches_golden(name: &str, actual: &[u8]) -> Result<(), String> {
    let path = fixture("golden").join(name);
    if std::env::var_os("RANKBIAS_BLESS").is_some() {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!(
            "{name} differs from golden\n--- expected\n{}\n--- actual\n{}",
            String::from_utf8_lossy(&expected),
            String::from_utf8_lossy(actual)
        ))
    }
}
