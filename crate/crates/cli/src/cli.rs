use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use rankbias::report::OutputFormat;
use rankbias::{Cutoff, Measure, MissingPolicy, TfMode};

#[derive(Debug, Parser)]
#[command(
    name = "rankbias",
    version,
    about = "Gender bias audit for ranked retrieval results"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Never changes output bytes.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Flat key=value file; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a BM25 index from a collection.
    Index(IndexArgs),
    /// Rank queries against an index and write a TREC run.
    Search(SearchArgs),
    /// Compute per-document gender magnitudes.
    Magnitude(MagnitudeArgs),
    /// Audit runs and write the bias report.
    Bias(BiasArgs),
    /// Select candidate queries for annotation from the most biased rankings.
    Pool(PoolArgs),
    /// Majority-vote query annotations into labels.
    Aggregate(AggregateArgs),
    /// Keep only queries labeled non-gendered.
    FilterQueries(FilterArgs),
    /// MRR and recall of a run against qrels.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct LexiconArgs {
    #[arg(long, value_name = "FILE", requires = "lexicon_male")]
    pub lexicon_female: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires = "lexicon_female")]
    pub lexicon_male: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Collection TSV (`doc_id<TAB>text`).
    #[arg(long, value_name = "FILE")]
    pub collection: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// Query TSV (`qid<TAB>text`).
    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long, default_value_t = 0.6)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.8)]
    pub b: f64,
    /// Run file; also writes `<out>.meta`. Standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MagnitudeArgs {
    #[arg(long, value_name = "FILE")]
    pub collection: PathBuf,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    #[arg(long, value_delimiter = ',', default_value = "tf")]
    pub measure: Vec<Measure>,
    #[arg(long, default_value_t = TfMode::Smoothed)]
    pub tf_mode: TfMode,
    /// One output file per measure, in the order of `--measure`.
    #[arg(long, value_name = "FILE", required = true)]
    pub out: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MagnitudeSource {
    /// Magnitude cache written by `magnitude`; repeat for several measures.
    #[arg(long, value_name = "FILE", conflicts_with = "collection")]
    pub collection_mags: Vec<PathBuf>,
    /// Compute magnitudes from the collection instead of a cache.
    #[arg(long, value_name = "FILE", requires = "lexicon_female")]
    pub collection: Option<PathBuf>,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TREC run file; repeat once per model.
    #[arg(long, value_name = "FILE")]
    pub run: Vec<PathBuf>,
    /// Renumber rank gaps instead of rejecting them.
    #[arg(long)]
    pub lenient_ranks: bool,
    /// What to do with run documents absent from the magnitudes.
    #[arg(long, default_value = "strict")]
    pub missing: MissingPolicy,
}

#[derive(Debug, Args)]
pub struct BiasArgs {
    #[command(flatten)]
    pub runs: RunArgs,
    #[command(flatten)]
    pub source: MagnitudeSource,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,30")]
    pub cutoffs: Vec<Cutoff>,
    #[arg(long, value_delimiter = ',', default_value = "tf,bool")]
    pub measure: Vec<Measure>,
    #[arg(long, default_value_t = TfMode::Smoothed)]
    pub tf_mode: TfMode,
    /// `model=reference`; adds a delta column for `model`.
    #[arg(long, value_name = "MODEL=REF")]
    pub reference: Vec<String>,
    #[arg(long, default_value = "csv")]
    pub format: OutputFormat,
    /// Report file; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Directory for per-query bias files, one `<model>.tsv` per run.
    #[arg(long, value_name = "DIR")]
    pub per_query_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    #[command(flatten)]
    pub runs: RunArgs,
    #[command(flatten)]
    pub source: MagnitudeSource,
    /// Per-query bias file from `bias --per-query-dir`, instead of runs.
    #[arg(long, value_name = "FILE", conflicts_with = "run")]
    pub query_bias: Vec<PathBuf>,
    /// Query TSV supplying the text of pooled queries.
    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub depth: usize,
    #[arg(long, default_value = "10")]
    pub bias_cutoff: Cutoff,
    #[arg(long, default_value_t = TfMode::Smoothed)]
    pub tf_mode: TfMode,
    /// Pool TSV; also writes `<out>.meta`.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// CSV with header `query_id,annotator_id,category`.
    #[arg(long, value_name = "FILE")]
    pub annotations: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub annotators: usize,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Query ids without a majority, one per line.
    #[arg(long, value_name = "FILE")]
    pub dropped: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Labels written by `aggregate`.
    #[arg(long, value_name = "FILE")]
    pub labels: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,
    /// Qrels (`qid 0 docid relevance`).
    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,
    #[arg(long, default_value = "10")]
    pub cutoff: Cutoff,
    #[arg(long)]
    pub lenient_ranks: bool,
}
