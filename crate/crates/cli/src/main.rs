//! Command-line workflows over the causal engine and the text-side pipeline.
//!
//! Every subcommand is deterministic given its flags: all randomness is
//! seeded, parallel loops derive per-item streams, and JSON output uses
//! sorted keys, so repeated runs are byte-identical regardless of thread
//! count.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

mod commands;

#[derive(Parser)]
#[command(
    name = "eacl",
    version,
    about = "Exact and statistical analysis of confounding in extract-and-generate summarization"
)]
struct Cli {
    /// Emit machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,

    /// Worker threads for corpus-level loops (results are independent of
    /// this value).
    #[arg(long, global = true, env = "EACL_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuzz random models and check the exact identities the engine
    /// guarantees, printing the largest residuals.
    VerifyTheorems(VerifyArgs),
    /// Exact causal effect of irrelevant sentences for a model.
    CeExact(CeExactArgs),
    /// Plug-in causal-effect estimate from a labeled corpus.
    CeEstimate(CeEstimateArgs),
    /// Sample a model and write a verbalized JSONL corpus.
    SynthCorpus(SynthArgs),
    /// Overlap metrics of predictions against corpus references.
    Metrics(MetricsArgs),
    /// Train a summarizer on a corpus and evaluate it end to end.
    TrainEval(TrainEvalArgs),
    /// Pseudo-label sentence relevance by overlap with the gold summary.
    DistantLabel(DistantArgs),
    /// Faithfulness of predictions under an oracle verifier.
    ScoreFaithfulness(FaithfulnessArgs),
}

/// Model selection shared by subcommands that need one.
#[derive(Args, Clone)]
struct ModelSource {
    /// Model spec file (explicit tables or kind shorthand).
    #[arg(long, conflicts_with_all = ["example", "n_sentences", "vocab", "collisions"])]
    sem: Option<PathBuf>,

    /// One of the built-in worked examples.
    #[arg(long, value_enum)]
    example: Option<ExampleKindArg>,

    /// Sentences per document for --example.
    #[arg(long, default_value_t = 4)]
    n_sentences: usize,

    /// Sentence vocabulary size for --example (defaults to n_sentences).
    #[arg(long)]
    vocab: Option<usize>,

    /// Sample sentences i.i.d. with collisions instead of distinct.
    #[arg(long)]
    collisions: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleKindArg {
    AllRelevant,
    FirstOnly,
    UniformPick,
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of random models to check.
    #[arg(long, default_value_t = 200)]
    n_sems: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Per-variable cardinalities are drawn from 1..=max-card.
    #[arg(long, default_value_t = 4)]
    max_card: usize,

    /// Dirichlet concentration for random rows.
    #[arg(long, default_value_t = 1.0)]
    concentration: f64,
}

#[derive(Args)]
struct CeExactArgs {
    #[command(flatten)]
    model: ModelSource,

    /// Display information quantities in bits instead of nats.
    #[arg(long)]
    bits: bool,
}

#[derive(Args)]
struct CeEstimateArgs {
    #[arg(long)]
    corpus: PathBuf,

    /// Seed for the train/held-out split.
    #[arg(long, default_value_t = 0)]
    split_seed: u64,

    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,

    #[arg(long, default_value_t = 1500)]
    epochs: usize,

    #[arg(long, default_value_t = 2.0)]
    lr: f64,

    #[arg(long, default_value_t = 1e-5)]
    l2: f64,

    /// Feature dimension is 2^hash-bits.
    #[arg(long, default_value_t = 18)]
    hash_bits: u32,

    /// Classifier initialization seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    bits: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    model: ModelSource,

    #[arg(long)]
    count: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output corpus path (JSONL).
    #[arg(long)]
    out: PathBuf,

    /// Also write the explicit model spec next to the corpus.
    #[arg(long)]
    save_sem: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Predictions JSONL ({"summary": ...} per line, aligned with corpus).
    #[arg(long)]
    pred: PathBuf,

    #[arg(long)]
    corpus: PathBuf,

    /// Compare raw tokens instead of stems.
    #[arg(long)]
    no_stem: bool,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum ModeArg {
    Direct,
    Sure,
    Oracle,
    Pipeline,
}

#[derive(Args)]
struct TrainEvalArgs {
    #[arg(long)]
    corpus: PathBuf,

    #[arg(long, value_enum)]
    mode: ModeArg,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 0)]
    split_seed: u64,

    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,

    #[arg(long, default_value_t = 3)]
    order: usize,

    #[arg(long, default_value_t = 1e-2)]
    alpha: f64,

    #[arg(long, default_value_t = 0.5)]
    copy_weight: f64,

    /// Extractive post-processing threshold.
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,

    #[arg(long, default_value_t = 32)]
    max_len: usize,

    /// Compare top-k and bottom-k examples by estimated confounding
    /// against the direct baseline (mode sure).
    #[arg(long)]
    analyze_ce: bool,

    /// Group size for --analyze-ce.
    #[arg(long, default_value_t = 50)]
    k: usize,

    /// Write generated predictions (JSONL) here.
    #[arg(long)]
    pred_out: Option<PathBuf>,

    /// Write the evaluation split (corpus JSONL) here, aligned with
    /// --pred-out.
    #[arg(long)]
    eval_corpus_out: Option<PathBuf>,
}

#[derive(Args)]
struct DistantArgs {
    #[arg(long)]
    corpus: PathBuf,

    #[arg(long, default_value_t = 0.8)]
    threshold: f64,

    /// Which side of the ROUGE-1 score to threshold.
    #[arg(long, value_enum, default_value_t = SideArg::Precision)]
    side: SideArg,

    /// Sweep thresholds 0.5/0.6/0.7/0.8 and report overlap at each.
    #[arg(long)]
    sweep: bool,

    /// Write the pseudo-labels as JSONL here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Precision,
    Recall,
    F1,
}

#[derive(Args)]
struct FaithfulnessArgs {
    /// Corpus aligned line-by-line with --pred.
    #[arg(long)]
    corpus: PathBuf,

    /// Labeled corpus to train the oracle verifier on. Without it the
    /// verifier trains on the train split of --corpus.
    #[arg(long)]
    train_corpus: Option<PathBuf>,

    /// Predictions JSONL with `system` and, for extract-and-generate
    /// systems, `basis_sentences`.
    #[arg(long)]
    pred: PathBuf,

    #[arg(long, default_value_t = 0)]
    split_seed: u64,

    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,

    #[arg(long, default_value_t = 3)]
    order: usize,

    #[arg(long, default_value_t = 1e-2)]
    alpha: f64,

    #[arg(long, default_value_t = 0.5)]
    copy_weight: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = cli.threads {
        pool = pool.num_threads(threads);
    }
    let pool = match pool.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = pool.install(|| match &cli.command {
        Command::VerifyTheorems(args) => commands::verify_theorems(args, cli.json),
        Command::CeExact(args) => commands::ce_exact(args, cli.json),
        Command::CeEstimate(args) => commands::ce_estimate(args, cli.json),
        Command::SynthCorpus(args) => commands::synth_corpus(args, cli.json),
        Command::Metrics(args) => commands::metrics(args, cli.json),
        Command::TrainEval(args) => commands::train_eval(args, cli.json),
        Command::DistantLabel(args) => commands::distant_label_cmd(args, cli.json),
        Command::ScoreFaithfulness(args) => commands::score_faithfulness(args, cli.json),
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
