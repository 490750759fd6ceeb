//! The `ruber` command line: embedding training, scorer training, scoring,
//! and correlation reports.

mod config;
pub mod table;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{
    correlate, inter_annotator, quantile_bins, scatter_points, write_scatter_csv, AgreementSummary,
    CorrelationReport, CorrelationResult, ReportRow,
};
use crate::blending::BlendStrategy;
use crate::corpus::{load_annotated, load_pairs, Format};
use crate::embeddings::{
    load_text_embeddings, save_text_embeddings, train_sgns, EmbeddingMatrix, Embeddings, SgnsConfig,
};
use crate::error::{Result, RuberError};
use crate::unreferenced::{load_checkpoint, save_checkpoint, train, Checkpoint, TrainConfig};

pub use config::{expand_config_args, read_config_file, render_resolved};
pub use table::{score_dataset, ScoreRow, ScoreTable, SCORE_COLUMNS};

#[derive(Debug, Parser)]
#[command(name = "ruber", version, about = "Referenced/unreferenced dialog reply evaluation")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train skip-gram word embeddings on a query/reply corpus.
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Train the unreferenced query/reply scorer.
    TrainScorer(TrainScorerArgs),
    /// Score an annotated dataset with every metric.
    Score(ScoreArgs),
    /// Correlate a score table with human judgments.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct TrainEmbeddingsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Corpus format; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    pub lr: f64,
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainScorerArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub margin: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value_t = 128)]
    pub mlp_hidden: usize,
    #[arg(long, default_value_t = 50)]
    pub max_len: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub fine_tune_embeddings: bool,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    /// Annotated dataset.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Blend summarized on stdout; all four are always written.
    #[arg(long, default_value_t = BlendStrategy::ArithmeticMean)]
    pub blend: BlendStrategy,
    #[arg(long)]
    pub allow_vocab_mismatch: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Score table written by `score`.
    #[arg(long)]
    pub scores: PathBuf,
    /// Annotated dataset, for the inter-annotator rows.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Standard deviation of the jitter added to human scores in scatter exports.
    #[arg(long, default_value_t = 0.25)]
    pub sigma: f64,
    #[arg(long, default_value_t = 5)]
    pub bins: usize,
}

/// Parses `args` (program name first), runs the command, and returns the exit code.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let args = match expand_config_args(args) {
        Ok(a) => a,
        Err(e) => return report_error(&e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &RuberError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::TrainEmbeddings(a) => {
            echo_config("train-embeddings", &a);
            cmd_train_embeddings(&a)
        }
        Command::TrainScorer(a) => {
            echo_config("train-scorer", &a);
            cmd_train_scorer(&a)
        }
        Command::Score(a) => {
            echo_config("score", &a);
            cmd_score(&a)
        }
        Command::Report(a) => {
            echo_config("report", &a);
            cmd_report(&a)
        }
    }
}

fn echo_config<T: Serialize>(name: &str, args: &T) {
    eprintln!("# {name} resolved config");
    eprint!("{}", render_resolved(args));
}

fn format_for(path: &Path, format: Option<Format>) -> Format {
    format.unwrap_or_else(|| Format::from_path(path))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| RuberError::io(path, e))
}

pub fn cmd_train_embeddings(a: &TrainEmbeddingsArgs) -> Result<()> {
    let config = SgnsConfig {
        dim: a.dim,
        window: a.window,
        negatives: a.negatives,
        epochs: a.epochs,
        lr: a.lr,
        min_count: a.min_count,
        seed: a.seed,
    };
    config.validate()?;
    let dataset = load_pairs(&a.corpus, format_for(&a.corpus, a.format))?;
    let start = Instant::now();
    let emb = train_sgns(&dataset, &config)?;
    save_text_embeddings(&emb, &a.out)?;
    println!("vocab_size={} dim={}", emb.vocab.len(), emb.dim());
    eprintln!("duration={:.3}s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn cmd_train_scorer(a: &TrainScorerArgs) -> Result<()> {
    let config = TrainConfig {
        margin: a.margin,
        lr: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        hidden: a.hidden,
        mlp_hidden: a.mlp_hidden,
        max_len: a.max_len,
        seed: a.seed,
        fine_tune_embeddings: a.fine_tune_embeddings,
        beta1: a.beta1,
        beta2: a.beta2,
        epsilon: a.epsilon,
    };
    config.validate()?;
    let dataset = load_pairs(&a.corpus, format_for(&a.corpus, a.format))?;
    let emb = load_text_embeddings(&a.embeddings)?;
    let trained = train(&dataset, &emb, &config, |s| match s.heldout_accuracy {
        Some(acc) => println!(
            "epoch={} loss={:.6} heldout_accuracy={:.4}",
            s.epoch, s.mean_loss, acc
        ),
        None => println!("epoch={} loss={:.6} heldout_accuracy=n/a", s.epoch, s.mean_loss),
    })?;
    println!(
        "train_pairs={} heldout_pairs={}",
        trained.log.train_pairs, trained.log.heldout_pairs
    );
    let checkpoint = Checkpoint {
        params: trained.params,
        config,
        vocab_hash: emb.vocab.content_hash(),
        tuned_embeddings: trained.tuned_embeddings,
    };
    save_checkpoint(&checkpoint, &a.out)
}

pub fn cmd_score(a: &ScoreArgs) -> Result<()> {
    let dataset = load_annotated(&a.corpus, format_for(&a.corpus, a.format))?;
    let emb = load_text_embeddings(&a.embeddings)?;
    let checkpoint = load_checkpoint(&a.checkpoint, &emb.vocab, a.allow_vocab_mismatch)?;
    if checkpoint.params.input_dim() != emb.dim() {
        return Err(RuberError::Compatibility(format!(
            "checkpoint expects {}-dim embeddings, {} has {}",
            checkpoint.params.input_dim(),
            a.embeddings.display(),
            emb.dim()
        )));
    }
    let scorer_emb = match &checkpoint.tuned_embeddings {
        Some(m) => Embeddings::new(emb.vocab.clone(), EmbeddingMatrix::clone(m))?,
        None => emb.clone(),
    };
    let table = score_dataset(
        &dataset,
        &emb,
        &scorer_emb,
        &checkpoint.params,
        checkpoint.config.max_len,
    )?;
    write_file(&a.out, table.to_tsv().as_bytes())?;
    let column = table::blend_column(a.blend);
    let values = table.column(column).expect("blend column exists");
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    println!(
        "pairs={} skipped={} mean_{column}={mean:.6}",
        table.rows.len(),
        dataset.skipped
    );
    Ok(())
}

/// Metric rows of the report, in display order.
pub const REPORT_METRICS: [&str; 11] = [
    "bleu1",
    "bleu2",
    "bleu3",
    "bleu4",
    "rouge_l",
    "s_R",
    "s_U",
    "ruber_min",
    "ruber_geometric",
    "ruber_arithmetic",
    "ruber_max",
];

pub const HUMAN_ROWS: [&str; 3] = ["Human (Avg)", "Human (Max)", "Human (Median)"];

fn label(column: &str) -> &'static str {
    SCORE_COLUMNS
        .iter()
        .find(|(c, _)| *c == column)
        .map(|(_, l)| *l)
        .expect("known column")
}

/// Builds the correlation report for a score table, with agreement rows
/// from `annotated` when given.
pub fn build_report(
    table: &ScoreTable,
    annotated: Option<&crate::corpus::Dataset<crate::corpus::AnnotatedPair>>,
) -> Result<CorrelationReport> {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let undefined = CorrelationResult::UNDEFINED;
    match annotated {
        None => {
            notes.push("human agreement rows undefined: no annotated corpus given".to_owned());
            for name in HUMAN_ROWS {
                rows.push(ReportRow {
                    name: name.to_owned(),
                    result: undefined,
                });
            }
        }
        Some(ds) if ds.annotators() < 2 => {
            notes.push(format!(
                "human agreement rows undefined: {} annotator(s), need at least 2",
                ds.annotators()
            ));
            for name in HUMAN_ROWS {
                rows.push(ReportRow {
                    name: name.to_owned(),
                    result: undefined,
                });
            }
        }
        Some(ds) => {
            let agreement = inter_annotator(ds)?;
            let pick = |f: fn(&AgreementSummary) -> Option<crate::analysis::Correlation>| CorrelationResult {
                pearson: f(&agreement.pearson),
                spearman: f(&agreement.spearman),
                n_used: agreement.n_pairs,
            };
            rows.push(ReportRow {
                name: HUMAN_ROWS[0].to_owned(),
                result: pick(|s| s.avg),
            });
            rows.push(ReportRow {
                name: HUMAN_ROWS[1].to_owned(),
                result: pick(|s| s.max),
            });
            rows.push(ReportRow {
                name: HUMAN_ROWS[2].to_owned(),
                result: pick(|s| s.median),
            });
            let excluded = agreement.pearson.excluded.max(agreement.spearman.excluded);
            if excluded > 0 {
                notes.push(format!(
                    "{excluded} annotator(s) with constant scores excluded from agreement rows"
                ));
            }
        }
    }
    let human = table.human();
    for column in REPORT_METRICS {
        let values = table.column(column).expect("known column");
        let result = correlate(&human, &values)?;
        let dropped = table.rows.len() - result.n_used;
        if dropped > 0 {
            notes.push(format!(
                "{}: {dropped} pair(s) with undefined scores excluded",
                label(column)
            ));
        }
        rows.push(ReportRow {
            name: label(column).to_owned(),
            result,
        });
    }
    Ok(CorrelationReport {
        dataset: table.dataset.clone(),
        n_pairs: table.rows.len(),
        rows,
        normalization: table.normalization.clone(),
        notes,
    })
}

pub fn cmd_report(a: &ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&a.scores).map_err(|e| RuberError::io(&a.scores, e))?;
    let table = ScoreTable::parse(&text, &a.scores)?;
    if table.rows.is_empty() {
        return Err(RuberError::parse(&a.scores, 0, "score table has no rows"));
    }
    let annotated = match &a.corpus {
        Some(p) => Some(load_annotated(p, format_for(p, a.format))?),
        None => None,
    };
    if let Some(ds) = &annotated {
        if ds.len() != table.rows.len() {
            return Err(RuberError::Config(format!(
                "{} has {} pairs but the score table has {}",
                ds.provenance.path.display(),
                ds.len(),
                table.rows.len()
            )));
        }
    }
    let mut report = build_report(&table, annotated.as_ref())?;

    fs::create_dir_all(&a.out).map_err(|e| RuberError::io(&a.out, e))?;
    let human = table.human();
    let mut quantiles = String::from("metric,bin,size,human_mean,metric_mean\n");
    for (column, _) in SCORE_COLUMNS {
        let values = table.column(column).expect("known column");
        let (h, m): (Vec<f64>, Vec<f64>) = human
            .iter()
            .zip(&values)
            .filter(|(h, m)| !h.is_nan() && !m.is_nan())
            .map(|(&h, &m)| (h, m))
            .unzip();
        if h.len() >= a.bins {
            for (b, bin) in quantile_bins(&h, &m, a.bins)?.iter().enumerate() {
                quantiles.push_str(&format!(
                    "{column},{},{},{:.6},{:.6}\n",
                    b + 1,
                    bin.size,
                    bin.human_mean,
                    bin.metric_mean
                ));
            }
        } else {
            report.notes.push(format!(
                "{}: {} defined pair(s), too few for {} quantile bins",
                label(column),
                h.len(),
                a.bins
            ));
        }
        let points = scatter_points(&human, &values, a.sigma, a.seed)?;
        let mut csv = Vec::new();
        write_scatter_csv(&points, &mut csv).expect("writing to memory");
        write_file(&a.out.join(format!("scatter_{column}.csv")), &csv)?;
    }
    write_file(&a.out.join("quantiles.csv"), quantiles.as_bytes())?;
    let text = report.to_text();
    write_file(&a.out.join("report.txt"), text.as_bytes())?;
    write_file(&a.out.join("report.json"), report.to_json().as_bytes())?;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes());
    Ok(())
}
