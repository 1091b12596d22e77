//! `lsr`: batch front end for the sparse retrieval engine. Every
//! subcommand reads and writes the library's file formats, so anything
//! scripted here can be reproduced through the API and vice versa.

mod config;
mod tsv;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lsr_core::encoder::{
    combine_idf, compute_idf, encode_query, read_embeddings, read_idf, read_table, read_vocab,
    write_idf, write_table, EncoderError,
};
use lsr_core::eval::{mrr_at_k, ndcg_at_k, read_qrels, read_run, write_run, MetricReport, RunFile};
use lsr_core::fitter::{fit, FitConfig, FitError, LogRow, LossKind, Regularizer, TrainTriple};
use lsr_core::index::{build_index, read_index, write_index, BuildConfig};
use lsr_core::search::{
    bench_approximate, bench_exhaustive, search_approximate, search_exhaustive, SearchParams,
};
use lsr_core::sparse::{read_collection, write_collection, Collection};

use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "lsr",
    version,
    about = "Inference-free learned sparse retrieval",
    after_help = "Every flag can also be set in a key = value config file passed via --config; \
                  explicit flags override the file, which overrides built-in defaults."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a pruned, clustered inverted index from a collection
    BuildIndex(BuildIndexArgs),
    /// Fit a token score table by distillation over training triples
    FitTable(FitTableArgs),
    /// Encode raw text queries into sparse vectors through a table
    Encode(EncodeArgs),
    /// Compute smoothed IDF values from a collection
    Idf(IdfArgs),
    /// Rank documents for encoded queries and write a TREC run file
    Search(SearchArgs),
    /// Score a run file against relevance judgments
    Evaluate(EvaluateArgs),
    /// Time retrieval over parameter sweeps and write a trade-off CSV
    Bench(BenchArgs),
}

#[derive(Args)]
struct BuildIndexArgs {
    /// Collection file (LSRC binary)
    collection: PathBuf,
    /// Output index file
    out: PathBuf,
    /// Keep at most this many highest-impact postings per token
    #[arg(long)]
    lambda: Option<u32>,
    /// Fraction of summary L1 mass to retain, in (0, 1]
    #[arg(long)]
    alpha: Option<f32>,
    /// Clusters per posting list as a fraction of its length, in (0, 1]
    #[arg(long)]
    centroid_fraction: Option<f32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FitTableArgs {
    /// Training triples TSV: qid, query text, pos doc row, neg doc row,
    /// teacher scores
    triples: PathBuf,
    /// Collection the triple doc rows index into
    collection: PathBuf,
    /// Token embedding matrix (LSRE binary)
    embeddings: PathBuf,
    /// Tokenizer vocabulary, one token per line
    vocab: PathBuf,
    /// Output score table; the training log lands at <out>.log.csv
    out: PathBuf,
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    #[arg(long, value_enum)]
    reg: Option<RegArg>,
    #[arg(long)]
    lambda_q: Option<f64>,
    #[arg(long)]
    lambda_d: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    /// Queries TSV: qid<TAB>text
    queries: PathBuf,
    /// Score table file
    table: PathBuf,
    /// Tokenizer vocabulary
    vocab: PathBuf,
    /// Output collection of encoded queries; query ids land in
    /// <out>.qids, rejected (empty) queries in <out>.rejects
    out: PathBuf,
    /// Multiply token scores by IDF values from this file
    #[arg(long)]
    idf: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct IdfArgs {
    /// Collection file
    collection: PathBuf,
    /// Output IDF table
    out: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    /// Index file in approx mode, collection file in exact mode
    target: PathBuf,
    /// Encoded queries (collection binary with a <queries>.qids sidecar)
    queries: PathBuf,
    /// Output TREC run file
    out: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    k: Option<usize>,
    /// Use only this many highest-weight query terms (0 = all)
    #[arg(long)]
    query_cut: Option<usize>,
    /// Skip blocks whose bound, scaled by this factor, cannot beat the
    /// current top-k floor; 1.0 never sacrifices a safe result
    #[arg(long)]
    heap_factor: Option<f64>,
    /// Forward collection backing the index (required in approx mode)
    #[arg(long)]
    collection: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// TREC run file
    run: PathBuf,
    /// Relevance judgments: qid 0 docid grade
    qrels: PathBuf,
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Collection file; indexes are rebuilt per sweep point
    collection: PathBuf,
    /// Encoded queries (collection binary)
    queries: PathBuf,
    /// Output CSV of one row per configuration
    out: PathBuf,
    /// Sweep grid, e.g. "lambda=2000,4000,8000;heap_factor=0.8,1.0"
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f32>,
    #[arg(long)]
    centroid_fraction: Option<f32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also score each configuration's run against these judgments
    /// (needs the <queries>.qids sidecar)
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Approx,
}

impl FromStr for ModeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(ModeArg::Exact),
            "approx" => Ok(ModeArg::Approx),
            _ => Err(format!("expected \"exact\" or \"approx\", found \"{s}\"")),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LossArg {
    /// KL divergence between teacher and student pair softmaxes
    Kl,
    /// Squared error on score margins
    Mse,
    /// Squared error on raw scores
    PointwiseMse,
}

impl From<LossArg> for LossKind {
    fn from(v: LossArg) -> LossKind {
        match v {
            LossArg::Kl => LossKind::Kl,
            LossArg::Mse => LossKind::MarginMse,
            LossArg::PointwiseMse => LossKind::PointwiseMse,
        }
    }
}

impl FromStr for LossArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "kl" => Ok(LossArg::Kl),
            "mse" => Ok(LossArg::Mse),
            "pointwise-mse" => Ok(LossArg::PointwiseMse),
            _ => Err(format!("expected \"kl\", \"mse\", or \"pointwise-mse\", found \"{s}\"")),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegArg {
    L1,
    Flops,
}

impl From<RegArg> for Regularizer {
    fn from(v: RegArg) -> Regularizer {
        match v {
            RegArg::L1 => Regularizer::L1,
            RegArg::Flops => Regularizer::Flops,
        }
    }
}

impl FromStr for RegArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "l1" => Ok(RegArg::L1),
            "flops" => Ok(RegArg::Flops),
            _ => Err(format!("expected \"l1\" or \"flops\", found \"{s}\"")),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Mrr,
    Ndcg,
}

impl FromStr for MetricArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mrr" => Ok(MetricArg::Mrr),
            "ndcg" => Ok(MetricArg::Ndcg),
            _ => Err(format!("expected \"mrr\" or \"ndcg\", found \"{s}\"")),
        }
    }
}

enum AppError {
    /// Bad arguments, config, or input files: exit 1.
    Validation(anyhow::Error),
    /// Failure while doing or persisting the work: exit 2.
    Runtime(anyhow::Error),
    /// Training produced non-finite values: exit 3.
    Diverged { step: usize },
}

type AppResult<T> = Result<T, AppError>;

fn invalid(e: impl Into<anyhow::Error>) -> AppError {
    AppError::Validation(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> AppError {
    AppError::Runtime(e.into())
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(AppError::Validation(e)) => {
            eprintln!("error: {e:#}");
            1
        }
        Err(AppError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            2
        }
        Err(AppError::Diverged { step }) => {
            eprintln!("error: training diverged at step {step}");
            3
        }
    }
}

fn dispatch(command: Command) -> AppResult<()> {
    match command {
        Command::BuildIndex(args) => cmd_build_index(args),
        Command::FitTable(args) => cmd_fit_table(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Idf(args) => cmd_idf(args),
        Command::Search(args) => cmd_search(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

fn load_collection(path: &Path) -> AppResult<Collection> {
    read_collection(path)
        .map_err(|e| invalid(anyhow!(e).context(format!("collection {}", path.display()))))
}

/// Encoded queries come as a collection plus a qid-per-line sidecar.
fn load_encoded_queries(path: &Path) -> AppResult<(Collection, Vec<String>)> {
    let vectors = load_collection(path)?;
    let qids_path = sidecar(path, "qids");
    let text = std::fs::read_to_string(&qids_path).map_err(|e| {
        invalid(anyhow!(e).context(format!("query id sidecar {}", qids_path.display())))
    })?;
    let qids: Vec<String> = text.lines().map(str::to_string).collect();
    if qids.len() != vectors.n_docs() {
        return Err(invalid(anyhow!(
            "{} lists {} ids but {} holds {} queries",
            qids_path.display(),
            qids.len(),
            path.display(),
            vectors.n_docs()
        )));
    }
    Ok((vectors, qids))
}

fn cmd_build_index(args: BuildIndexArgs) -> AppResult<()> {
    let mut file = FileConfig::load(args.config.as_deref()).map_err(invalid)?;
    let defaults = BuildConfig::default();
    let config = BuildConfig {
        max_postings: file.take("lambda", args.lambda, defaults.max_postings).map_err(invalid)?,
        alpha: file.take("alpha", args.alpha, defaults.alpha).map_err(invalid)?,
        centroid_fraction: file
            .take("centroid-fraction", args.centroid_fraction, defaults.centroid_fraction)
            .map_err(invalid)?,
        seed: file.take("seed", args.seed, defaults.seed).map_err(invalid)?,
    };
    file.finish().map_err(invalid)?;
    config.validate().map_err(invalid)?;

    let collection = load_collection(&args.collection)?;
    let index = build_index(collection, config).map_err(invalid)?;
    write_index(&index, &args.out)
        .map_err(|e| runtime(anyhow!(e).context(format!("writing {}", args.out.display()))))?;
    println!("{}", index.stats());
    Ok(())
}

fn cmd_fit_table(args: FitTableArgs) -> AppResult<()> {
    let mut file = FileConfig::load(args.config.as_deref()).map_err(invalid)?;
    let defaults = FitConfig::default();
    let cfg = FitConfig {
        loss: file.take("loss", args.loss, LossArg::Kl).map_err(invalid)?.into(),
        reg: file.take("reg", args.reg, RegArg::L1).map_err(invalid)?.into(),
        lambda_q: file.take("lambda-q", args.lambda_q, defaults.lambda_q).map_err(invalid)?,
        lambda_d: file.take("lambda-d", args.lambda_d, defaults.lambda_d).map_err(invalid)?,
        lr: file.take("lr", args.lr, defaults.lr).map_err(invalid)?,
        steps: file.take("steps", args.steps, defaults.steps).map_err(invalid)?,
        batch_size: file.take("batch", args.batch, defaults.batch_size).map_err(invalid)?,
        seed: file.take("seed", args.seed, defaults.seed).map_err(invalid)?,
    };
    file.finish().map_err(invalid)?;
    cfg.validate().map_err(invalid)?;

    let vocab = read_vocab(&args.vocab)
        .map_err(|e| invalid(anyhow!(e).context(format!("vocab {}", args.vocab.display()))))?;
    let emb = read_embeddings(&args.embeddings).map_err(|e| {
        invalid(anyhow!(e).context(format!("embeddings {}", args.embeddings.display())))
    })?;
    if emb.vocab_size() != vocab.vocab_size() {
        return Err(invalid(anyhow!(
            "embeddings cover {} tokens but the vocabulary has {}",
            emb.vocab_size(),
            vocab.vocab_size()
        )));
    }
    let collection = load_collection(&args.collection)?;
    let rows = tsv::read_triples(&args.triples).map_err(invalid)?;

    let mut triples = Vec::with_capacity(rows.len());
    let mut skipped = 0usize;
    for row in rows {
        for (what, doc) in [("positive", row.pos), ("negative", row.neg)] {
            if doc as usize >= collection.n_docs() {
                return Err(invalid(anyhow!(
                    "triple {}: {what} doc {doc} beyond collection of {}",
                    row.qid,
                    collection.n_docs()
                )));
            }
        }
        // Specials carry no trainable score, so they are dropped here
        // exactly as build_table will later zero them.
        let ids: Vec<u32> = vocab
            .tokenize(&row.text)
            .ids()
            .iter()
            .copied()
            .filter(|id| !vocab.special_ids().contains(id))
            .collect();
        if ids.is_empty() {
            skipped += 1;
            continue;
        }
        triples.push(TrainTriple {
            query: lsr_core::encoder::TokenSequence::new(ids),
            pos: collection.doc(row.pos as usize).clone(),
            neg: collection.doc(row.neg as usize).clone(),
            teacher_pos: row.teacher_pos,
            teacher_neg: row.teacher_neg,
        });
    }
    if skipped > 0 {
        eprintln!("warning: {skipped} triples skipped (query tokenized to nothing)");
    }
    if triples.is_empty() {
        return Err(invalid(anyhow!("no usable training triples")));
    }

    let outcome = match fit(&triples, &emb, &cfg, vocab.special_ids()) {
        Ok(o) => o,
        Err(FitError::Diverged { step }) => return Err(AppError::Diverged { step }),
        Err(e) => return Err(invalid(e)),
    };

    write_table(&outcome.table, &args.out)
        .map_err(|e| runtime(anyhow!(e).context(format!("writing {}", args.out.display()))))?;
    let log_path = sidecar(&args.out, "log.csv");
    let mut log = String::from(LogRow::CSV_HEADER);
    log.push('\n');
    for row in &outcome.log {
        let _ = writeln!(log, "{}", row.csv_row());
    }
    std::fs::write(&log_path, log)
        .map_err(|e| runtime(anyhow!(e).context(format!("writing {}", log_path.display()))))?;

    let last = outcome.log.last();
    println!(
        "fitted {} tokens in {} steps, final loss {}",
        outcome.table.len(),
        outcome.state.step,
        last.map_or_else(|| "n/a".to_string(), |r| format!("{:.6}", r.total)),
    );
    Ok(())
}

fn cmd_encode(args: EncodeArgs) -> AppResult<()> {
    let file = FileConfig::load(args.config.as_deref()).map_err(invalid)?;
    file.finish().map_err(invalid)?;

    let vocab = read_vocab(&args.vocab)
        .map_err(|e| invalid(anyhow!(e).context(format!("vocab {}", args.vocab.display()))))?;
    let mut table = read_table(&args.table)
        .map_err(|e| invalid(anyhow!(e).context(format!("table {}", args.table.display()))))?;
    if table.len() != vocab.vocab_size() as usize {
        return Err(invalid(anyhow!(
            "table scores {} tokens but the vocabulary has {}",
            table.len(),
            vocab.vocab_size()
        )));
    }
    if let Some(idf_path) = &args.idf {
        let idf = read_idf(idf_path)
            .map_err(|e| invalid(anyhow!(e).context(format!("idf {}", idf_path.display()))))?;
        table = combine_idf(&table, &idf).map_err(invalid)?;
    }

    let rows = tsv::read_queries(&args.queries).map_err(invalid)?;
    let mut vectors = Vec::with_capacity(rows.len());
    let mut qids = Vec::with_capacity(rows.len());
    let mut rejects = Vec::new();
    for (qid, text) in rows {
        match encode_query(&vocab.tokenize(&text), &table) {
            Ok(v) => {
                vectors.push(v);
                qids.push(qid);
            }
            Err(EncoderError::EmptyQuery) => rejects.push(qid),
            Err(e) => return Err(invalid(anyhow!(e).context(format!("query {qid}")))),
        }
    }

    let encoded = Collection::new(vectors, vocab.vocab_size()).map_err(runtime)?;
    write_collection(&encoded, &args.out)
        .map_err(|e| runtime(anyhow!(e).context(format!("writing {}", args.out.display()))))?;
    let write_lines = |path: &Path, lines: &[String]| -> AppResult<()> {
        let mut text = lines.join("\n");
        if !lines.is_empty() {
            text.push('\n');
        }
        std::fs::write(path, text)
            .map_err(|e| runtime(anyhow!(e).context(format!("writing {}", path.display()))))
    };
    write_lines(&sidecar(&args.out, "qids"), &qids)?;
    write_lines(&sidecar(&args.out, "rejects"), &rejects)?;

    if !rejects.is_empty() {
        eprintln!("warning: {} queries encoded to nothing and were rejected", rejects.len());
    }
    println!("encoded {} queries ({} rejected)", encoded.n_docs(), rejects.len());
    Ok(())
}

fn cmd_idf(args: IdfArgs) -> AppResult<()> {
    let collection = load_collection(&args.collection)?;
    let idf = compute_idf(&collection);
    write_idf(&idf, &args.out)
        .map_err(|e| runtime(anyhow!(e).context(format!("writing {}", args.out.display()))))?;
    println!("idf over {} docs, {} tokens", idf.n_docs(), idf.len());
    Ok(())
}

fn cmd_search(args: SearchArgs) -> AppResult<()> {
    let mut file = FileConfig::load(args.config.as_deref()).map_err(invalid)?;
    let mode = file.take("mode", args.mode, ModeArg::Exact).map_err(invalid)?;
    let defaults = SearchParams::default();
    let params = SearchParams {
        k: file.take("k", args.k, defaults.k).map_err(invalid)?,
        query_cut: file.take("query-cut", args.query_cut, defaults.query_cut).map_err(invalid)?,
        heap_factor: file
            .take("heap-factor", args.heap_factor, defaults.heap_factor)
            .map_err(invalid)?,
    };
    let forward_path =
        file.take_opt("collection", args.collection.clone()).map_err(invalid)?;
    file.finish().map_err(invalid)?;
    params.validate().map_err(invalid)?;

    let (queries, qids) = load_encoded_queries(&args.queries)?;

    let mut run = RunFile::new();
    match mode {
        ModeArg::Exact => {
            let collection = load_collection(&args.target)?;
            for (qid, query) in qids.iter().zip(queries.iter()) {
                let hits = search_exhaustive(query, &collection, params.k).map_err(runtime)?;
                push_hits(&mut run, qid, &hits).map_err(runtime)?;
            }
        }
        ModeArg::Approx => {
            let Some(forward_path) = forward_path else {
                return Err(invalid(anyhow!(
                    "approx mode needs --collection for the forward index"
                )));
            };
            let forward = load_collection(&forward_path)?;
            let index = read_index(&args.target, forward).map_err(|e| {
                invalid(anyhow!(e).context(format!("index {}", args.target.display())))
            })?;
            for (qid, query) in qids.iter().zip(queries.iter()) {
                let hits = search_approximate(query, &index, &params).map_err(runtime)?;
                push_hits(&mut run, qid, &hits).map_err(runtime)?;
            }
        }
    }

    write_run(&run, &args.out, "lsr")
        .map_err(|e| runtime(anyhow!(e).context(format!("writing {}", args.out.display()))))?;
    println!("ranked {} queries at k={}", qids.len(), params.k);
    Ok(())
}

fn push_hits(
    run: &mut RunFile,
    qid: &str,
    hits: &lsr_core::search::TopKResult,
) -> anyhow::Result<()> {
    let ranking: Vec<(String, f64)> =
        hits.hits().iter().map(|&(d, s)| (format!("d{d}"), s)).collect();
    run.push_query(qid, ranking).map_err(|e| anyhow!(e))
}

fn cmd_evaluate(args: EvaluateArgs) -> AppResult<()> {
    let mut file = FileConfig::load(args.config.as_deref()).map_err(invalid)?;
    let metric = file.take("metric", args.metric, MetricArg::Mrr).map_err(invalid)?;
    let k = file.take("k", args.k, 10).map_err(invalid)?;
    file.finish().map_err(invalid)?;

    let run = read_run(&args.run)
        .map_err(|e| invalid(anyhow!(e).context(format!("run {}", args.run.display()))))?;
    let qrels = read_qrels(&args.qrels)
        .map_err(|e| invalid(anyhow!(e).context(format!("qrels {}", args.qrels.display()))))?;
    let report = match metric {
        MetricArg::Mrr => mrr_at_k(&run, &qrels, k),
        MetricArg::Ndcg => ndcg_at_k(&run, &qrels, k),
    }
    .map_err(invalid)?;
    println!("{}", MetricReport::CSV_HEADER);
    println!("{}", report.csv_row());
    Ok(())
}

struct Sweep {
    lambdas: Vec<u32>,
    heap_factors: Vec<f64>,
}

fn parse_sweep(spec: &str) -> anyhow::Result<Sweep> {
    let mut sweep = Sweep { lambdas: vec![BuildConfig::default().max_postings], heap_factors: vec![1.0] };
    for part in spec.split(';').filter(|p| !p.trim().is_empty()) {
        let (name, values) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("sweep entry \"{part}\" is not name=v1,v2,..."))?;
        let values = values.trim();
        if values.is_empty() {
            bail!("sweep entry \"{}\" lists no values", name.trim());
        }
        match name.trim() {
            "lambda" => {
                sweep.lambdas = values
                    .split(',')
                    .map(|v| v.trim().parse().context(format!("bad lambda \"{v}\"")))
                    .collect::<anyhow::Result<_>>()?;
            }
            "heap_factor" => {
                sweep.heap_factors = values
                    .split(',')
                    .map(|v| v.trim().parse().context(format!("bad heap_factor \"{v}\"")))
                    .collect::<anyhow::Result<_>>()?;
            }
            other => bail!("unknown sweep dimension \"{other}\" (use lambda, heap_factor)"),
        }
    }
    Ok(sweep)
}

fn cmd_bench(args: BenchArgs) -> AppResult<()> {
    let mut file = FileConfig::load(args.config.as_deref()).map_err(invalid)?;
    let defaults = BuildConfig::default();
    let k = file.take("k", args.k, 10).map_err(invalid)?;
    let alpha = file.take("alpha", args.alpha, defaults.alpha).map_err(invalid)?;
    let centroid_fraction = file
        .take("centroid-fraction", args.centroid_fraction, defaults.centroid_fraction)
        .map_err(invalid)?;
    let seed = file.take("seed", args.seed, defaults.seed).map_err(invalid)?;
    let sweep_spec: Option<String> = file.take_opt("sweep", args.sweep.clone()).map_err(invalid)?;
    let qrels_path: Option<PathBuf> =
        file.take_opt("qrels", args.qrels.clone()).map_err(invalid)?;
    file.finish().map_err(invalid)?;
    if k == 0 {
        return Err(invalid(anyhow!("k must be at least 1")));
    }
    let sweep = parse_sweep(sweep_spec.as_deref().unwrap_or("")).map_err(invalid)?;

    let collection = load_collection(&args.collection)?;
    let (queries, qids) = if qrels_path.is_some() {
        let (q, ids) = load_encoded_queries(&args.queries)?;
        (q, Some(ids))
    } else {
        (load_collection(&args.queries)?, None)
    };
    if queries.n_docs() == 0 {
        return Err(invalid(anyhow!("query set is empty")));
    }
    let query_vecs: Vec<_> = queries.iter().cloned().collect();
    let qrels = match &qrels_path {
        Some(p) => Some(
            read_qrels(p)
                .map_err(|e| invalid(anyhow!(e).context(format!("qrels {}", p.display()))))?,
        ),
        None => None,
    };

    // Untimed exact pass: the recall baseline and, with qrels, the
    // reference metric.
    let exact_results: Vec<Vec<(u32, f64)>> = query_vecs
        .iter()
        .map(|q| Ok(search_exhaustive(q, &collection, k).map_err(runtime)?.hits().to_vec()))
        .collect::<AppResult<_>>()?;
    let metric_of = |results: &[Vec<(u32, f64)>]| -> AppResult<Option<f64>> {
        let (Some(qrels), Some(qids)) = (&qrels, &qids) else { return Ok(None) };
        let mut run = RunFile::new();
        for (qid, hits) in qids.iter().zip(results) {
            run.push_query(qid, hits.iter().map(|&(d, s)| (format!("d{d}"), s)).collect())
                .map_err(runtime)?;
        }
        Ok(Some(mrr_at_k(&run, qrels, k).map_err(invalid)?.value))
    };

    let mut csv = String::from("mode,lambda,heap_factor,aqt_us,recall_at_k");
    if qrels.is_some() {
        csv.push_str(",mrr_at_k");
    }
    csv.push('\n');

    let exact_bench = bench_exhaustive(&query_vecs, &collection, k).map_err(runtime)?;
    let _ = write!(csv, "exact,,,{:.3},1", exact_bench.aqt_us);
    if let Some(m) = metric_of(&exact_results)? {
        let _ = write!(csv, ",{m}");
    }
    csv.push('\n');

    for &lambda in &sweep.lambdas {
        let config = BuildConfig { max_postings: lambda, alpha, centroid_fraction, seed };
        config.validate().map_err(invalid)?;
        let index = build_index(collection.clone(), config).map_err(invalid)?;
        for &heap_factor in &sweep.heap_factors {
            let params = SearchParams { k, query_cut: 0, heap_factor };
            params.validate().map_err(invalid)?;
            let results: Vec<Vec<(u32, f64)>> = query_vecs
                .iter()
                .map(|q| {
                    Ok(search_approximate(q, &index, &params).map_err(runtime)?.hits().to_vec())
                })
                .collect::<AppResult<_>>()?;
            let mut recall_sum = 0.0;
            for (approx, exact) in results.iter().zip(&exact_results) {
                if exact.is_empty() {
                    recall_sum += 1.0;
                    continue;
                }
                let found =
                    approx.iter().filter(|(d, _)| exact.iter().any(|(e, _)| e == d)).count();
                recall_sum += found as f64 / exact.len() as f64;
            }
            let recall = recall_sum / query_vecs.len() as f64;
            let bench = bench_approximate(&query_vecs, &index, &params).map_err(runtime)?;
            let _ = write!(csv, "approx,{lambda},{heap_factor},{:.3},{recall}", bench.aqt_us);
            if let Some(m) = metric_of(&results)? {
                let _ = write!(csv, ",{m}");
            }
            csv.push('\n');
        }
    }

    std::fs::write(&args.out, &csv)
        .map_err(|e| runtime(anyhow!(e).context(format!("writing {}", args.out.display()))))?;
    print!("{csv}");
    Ok(())
}
