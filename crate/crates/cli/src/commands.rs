use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};

use rankbias::corpus::{compute_magnitude_tables, DocumentReader};
use rankbias::lexicon::load_lexicon;
use rankbias::metrics::{audit_run, read_per_query_tsv};
use rankbias::pool::{
    aggregate_labels, filter_non_gendered, per_query_bias_for_pooling, pool_queries, read_labels,
    write_labels, write_pool, ModelQueryBias,
};
use rankbias::report::{build_report, mrr_recall, Qrels};
use rankbias::retrieval::{search_all, IDF_VARIANT, RUN_TAG};
use rankbias::runs::{join_magnitudes, parse_trec_run};
use rankbias::{
    Bm25Params, Cutoff, Error, GenderLexicon, Index, MagnitudeTable, Measure, PoolSpec, QuerySet,
    RankMode, Run,
};

use crate::cli::{
    AggregateArgs, BiasArgs, Command, EvalArgs, FilterArgs, IndexArgs, LexiconArgs, MagnitudeArgs,
    MagnitudeSource, PoolArgs, RunArgs, SearchArgs,
};
use crate::UsageError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Index(args) => index(args),
        Command::Search(args) => search(args),
        Command::Magnitude(args) => magnitude(args),
        Command::Bias(args) => bias(args),
        Command::Pool(args) => pool(args),
        Command::Aggregate(args) => aggregate(args),
        Command::FilterQueries(args) => filter_queries(args),
        Command::Eval(args) => eval(args),
    }
}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| path.display().to_string())?;
    Ok(BufReader::new(file))
}

/// Parse a whole file, attaching its path to any error.
fn read<T>(path: &Path, parse: impl FnOnce(BufReader<File>) -> rankbias::Result<T>) -> Result<T> {
    parse(open(path)?).with_context(|| path.display().to_string())
}

/// Write to `path`, or to standard output when there is none.
fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, bytes).with_context(|| path.display().to_string()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn meta_path(path: &Path) -> PathBuf {
    let mut name = OsString::from(path.as_os_str());
    name.push(".meta");
    PathBuf::from(name)
}

fn lexicon(args: &LexiconArgs) -> Result<GenderLexicon> {
    let (Some(female), Some(male)) = (&args.lexicon_female, &args.lexicon_male) else {
        return Err(usage("--lexicon-female and --lexicon-male are required"));
    };
    let (f, m) = (open(female)?, open(male)?);
    load_lexicon(f, m).with_context(|| format!("{} / {}", female.display(), male.display()))
}

fn rank_mode(lenient: bool) -> RankMode {
    if lenient {
        RankMode::Lenient
    } else {
        RankMode::Strict
    }
}

fn load_runs(args: &RunArgs) -> Result<Vec<Run>> {
    if args.run.is_empty() {
        return Err(usage("at least one --run is required"));
    }
    let mode = rank_mode(args.lenient_ranks);
    args.run
        .iter()
        .map(|path| {
            let run = read(path, |r| parse_trec_run(r, mode))?;
            info!(
                "{}: model {} with {} queries",
                path.display(),
                run.model_tag,
                run.lists.len()
            );
            Ok(run)
        })
        .collect()
}

/// Requested measures without repeats, in the order given.
fn unique<T: PartialEq + Copy>(values: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    for v in values {
        if !out.contains(v) {
            out.push(*v);
        }
    }
    out
}

fn sorted_cutoffs(cutoffs: &[Cutoff]) -> Vec<Cutoff> {
    cutoffs
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// One magnitude table per requested measure, from caches or the collection.
fn magnitude_tables(
    source: &MagnitudeSource,
    measures: &[Measure],
    tf_mode: rankbias::TfMode,
) -> Result<Vec<MagnitudeTable>> {
    if let Some(collection) = &source.collection {
        let lex = lexicon(&source.lexicon)?;
        return compute_magnitude_tables(
            DocumentReader::new(open(collection)?),
            &lex,
            measures,
            tf_mode,
        )
        .with_context(|| collection.display().to_string());
    }
    if source.collection_mags.is_empty() {
        return Err(usage(
            "magnitudes needed: give --collection-mags, or --collection with both lexicons",
        ));
    }
    let mut by_measure: BTreeMap<Measure, (PathBuf, MagnitudeTable)> = BTreeMap::new();
    for path in &source.collection_mags {
        let table = read(path, MagnitudeTable::read_tsv)?;
        if let Some((other, _)) = by_measure.get(&table.measure()) {
            return Err(usage(format!(
                "{} and {} both hold {} magnitudes",
                other.display(),
                path.display(),
                table.measure()
            )));
        }
        by_measure.insert(table.measure(), (path.clone(), table));
    }
    measures
        .iter()
        .map(|measure| {
            let (path, table) = by_measure.remove(measure).ok_or_else(|| {
                usage(format!(
                    "no --collection-mags file holds {measure} magnitudes"
                ))
            })?;
            if let Some(found) = table.tf_mode() {
                if found != tf_mode {
                    bail!(
                        "{}: magnitudes use tf_mode {found} but --tf-mode is {tf_mode}",
                        path.display()
                    );
                }
            }
            Ok(table)
        })
        .collect()
}

fn index(args: IndexArgs) -> Result<()> {
    let index = Index::build(DocumentReader::new(open(&args.collection)?))
        .with_context(|| args.collection.display().to_string())?;
    info!(
        "indexed {} documents, {} terms, avgdl {:.2}",
        index.doc_count(),
        index.term_count(),
        index.avgdl()
    );
    let mut bytes = Vec::new();
    index.write_to(&mut bytes)?;
    write_output(Some(&args.out), &bytes)
}

fn search(args: SearchArgs) -> Result<()> {
    let params = Bm25Params::new(args.k1, args.b).map_err(|e| usage(e.to_string()))?;
    if args.k == 0 {
        return Err(usage("--k must be positive"));
    }
    let index = read(&args.index, Index::read_from)?;
    let queries = read(&args.queries, QuerySet::read_tsv)?;
    let run = search_all(&index, &queries, &params, args.k);
    let without_hits = queries.len() - run.lists.len();
    if without_hits > 0 {
        warn!("{without_hits} queries matched no document and are absent from the run");
    }
    info!("bm25 k1={} b={} idf={IDF_VARIANT}", params.k1, params.b);

    let mut bytes = Vec::new();
    run.write_trec(&mut bytes)?;
    write_output(args.out.as_deref(), &bytes)?;
    if let Some(out) = &args.out {
        let meta = format!(
            "# rankbias {VERSION} run metadata\ntag={RUN_TAG}\nk1={}\nb={}\nk={}\nidf={IDF_VARIANT}\n\
             tokenizer=lowercase, split on non-alphanumeric\ndocuments={}\nqueries={}\nqueries_without_hits={without_hits}\n",
            params.k1,
            params.b,
            args.k,
            index.doc_count(),
            queries.len(),
        );
        write_output(Some(&meta_path(out)), meta.as_bytes())?;
    }
    Ok(())
}

fn magnitude(args: MagnitudeArgs) -> Result<()> {
    let measures = unique(&args.measure);
    if measures.len() != args.out.len() {
        return Err(usage(format!(
            "{} measures but {} --out files; give one --out per measure",
            measures.len(),
            args.out.len()
        )));
    }
    let lex = lexicon(&args.lexicon)?;
    let tables = compute_magnitude_tables(
        DocumentReader::new(open(&args.collection)?),
        &lex,
        &measures,
        args.tf_mode,
    )
    .with_context(|| args.collection.display().to_string())?;
    let mut outputs = Vec::new();
    for (table, path) in tables.iter().zip(&args.out) {
        let mut bytes = Vec::new();
        table.write_tsv(&mut bytes)?;
        outputs.push((path, bytes));
    }
    for (path, bytes) in outputs {
        write_output(Some(path), &bytes)?;
    }
    Ok(())
}

fn references(pairs: &[String]) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (model, reference) = pair
            .split_once('=')
            .filter(|(m, r)| !m.is_empty() && !r.is_empty())
            .ok_or_else(|| usage(format!("--reference expects model=reference, got {pair:?}")))?;
        if map
            .insert(model.to_string(), reference.to_string())
            .is_some()
        {
            return Err(usage(format!("two references given for {model}")));
        }
    }
    Ok(map)
}

fn bias(args: BiasArgs) -> Result<()> {
    let cutoffs = sorted_cutoffs(&args.cutoffs);
    let measures = unique(&args.measure);
    let references = references(&args.reference)?;
    let runs = load_runs(&args.runs)?;
    let tables = magnitude_tables(&args.source, &measures, args.tf_mode)?;

    let report = build_report(&runs, &tables, &cutoffs, &references, args.runs.missing).map_err(
        |e| match e {
            Error::MissingReference { .. } => usage(e.to_string()),
            e => e.into(),
        },
    )?;
    let mut bytes = Vec::new();
    report.emit(args.format, &mut bytes)?;

    let mut per_query = Vec::new();
    if let Some(dir) = &args.per_query_dir {
        for run in &runs {
            let mut buf = Vec::new();
            for table in &tables {
                let joined = join_magnitudes(run, table, args.runs.missing)?;
                audit_run(&joined, &cutoffs)?.write_per_query_tsv(&mut buf)?;
            }
            per_query.push((dir.join(format!("{}.tsv", run.model_tag)), buf));
        }
    }

    write_output(args.out.as_deref(), &bytes)?;
    if let Some(dir) = &args.per_query_dir {
        std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
    }
    for (path, buf) in per_query {
        write_output(Some(&path), &buf)?;
    }
    Ok(())
}

fn pooled_bias_from_files(paths: &[PathBuf], cutoff: Cutoff) -> Result<Vec<ModelQueryBias>> {
    let mut tables: Vec<ModelQueryBias> = Vec::new();
    for path in paths {
        let (model, rows) = read(path, read_per_query_tsv)?;
        if tables.iter().any(|t| t.model_tag == model) {
            bail!(
                "{}: model {model} appears in more than one --query-bias file",
                path.display()
            );
        }
        let rab: BTreeMap<String, f64> = rows
            .into_iter()
            .filter(|r| r.measure == Measure::Tf && r.cutoff == cutoff)
            .map(|r| (r.query_id, r.rab))
            .collect();
        if rab.is_empty() {
            bail!("{}: no tf rows at cutoff {cutoff}", path.display());
        }
        tables.push(ModelQueryBias {
            model_tag: model,
            rab,
        });
    }
    Ok(tables)
}

fn pool(args: PoolArgs) -> Result<()> {
    if args.depth == 0 {
        return Err(usage("--depth must be positive"));
    }
    let spec = PoolSpec {
        depth: args.depth,
        bias_cutoff: args.bias_cutoff,
        tf_mode: args.tf_mode,
    };
    let (tables, source) = if args.query_bias.is_empty() {
        let runs = load_runs(&args.runs)?;
        let table = magnitude_tables(&args.source, &[Measure::Tf], spec.tf_mode)?
            .pop()
            .expect("one table per measure");
        let tables = per_query_bias_for_pooling(&runs, &table, &spec, args.runs.missing)?;
        (tables, format!("runs tf_mode={}", spec.tf_mode))
    } else {
        let tables = pooled_bias_from_files(&args.query_bias, spec.bias_cutoff)?;
        (tables, "per-query files".to_string())
    };
    let queries = read(&args.queries, QuerySet::read_tsv)?;
    let pooled = pool_queries(&tables, spec.depth);
    info!(
        "pooled {} queries from {} models",
        pooled.len(),
        tables.len()
    );

    let mut bytes = Vec::new();
    write_pool(&pooled, &queries, &mut bytes)
        .with_context(|| args.queries.display().to_string())?;
    let models: Vec<&str> = tables.iter().map(|t| t.model_tag.as_str()).collect();
    let meta = format!(
        "# rankbias {VERSION} pool metadata\ndepth={}\nbias_cutoff={}\nmeasure=tf\nsource={source}\nmodels={}\npooled={}\n",
        spec.depth,
        spec.bias_cutoff,
        models.join(","),
        pooled.len()
    );
    write_output(Some(&args.out), &bytes)?;
    write_output(Some(&meta_path(&args.out)), meta.as_bytes())
}

fn aggregate(args: AggregateArgs) -> Result<()> {
    if args.annotators == 0 {
        return Err(usage("--annotators must be positive"));
    }
    let agg = aggregate_labels(open(&args.annotations)?, args.annotators)
        .with_context(|| args.annotations.display().to_string())?;
    info!(
        "{} queries labeled, {} dropped without a majority",
        agg.labels.len(),
        agg.dropped.len()
    );
    let mut labels = Vec::new();
    write_labels(&agg.labels, &mut labels)?;
    let dropped: String = agg.dropped.iter().map(|q| format!("{q}\n")).collect();
    write_output(Some(&args.out), &labels)?;
    if let Some(path) = &args.dropped {
        write_output(Some(path), dropped.as_bytes())?;
    }
    Ok(())
}

fn filter_queries(args: FilterArgs) -> Result<()> {
    let labels = read(&args.labels, read_labels)?;
    let queries = read(&args.queries, QuerySet::read_tsv)?;
    let kept = filter_non_gendered(&labels, &queries)
        .with_context(|| args.labels.display().to_string())?;
    if kept.is_empty() {
        warn!("no query is labeled non_gendered; writing an empty query file");
    } else {
        info!("kept {} of {} queries", kept.len(), queries.len());
    }
    let mut bytes = Vec::new();
    kept.write_tsv(&mut bytes)?;
    write_output(Some(&args.out), &bytes)
}

fn eval(args: EvalArgs) -> Result<()> {
    let run = read(&args.run, |r| {
        parse_trec_run(r, rank_mode(args.lenient_ranks))
    })?;
    let qrels = read(&args.qrels, Qrels::parse)?;
    let quality = mrr_recall(&run, &qrels, args.cutoff)?;
    if quality.n_excluded > 0 {
        warn!(
            "{} run queries have no relevant document in the qrels and are excluded",
            quality.n_excluded
        );
    }
    let t = args.cutoff;
    let out = format!(
        "model\t{}\nmrr@{t}\t{}\nrecall@{t}\t{}\nn_queries\t{}\nn_excluded\t{}\n",
        run.model_tag, quality.mrr, quality.recall, quality.n_queries, quality.n_excluded
    );
    write_output(None, out.as_bytes())
}
