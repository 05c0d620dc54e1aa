//! `kgalign`: benchmark sampling, training, inference and evaluation for
//! embedding-based entity alignment.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kgalign_core::Error;

/// Environment variable giving the output root when `--out` is omitted.
pub const OUT_DIR_ENV: &str = "KGALIGN_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "kgalign", version, about = "Entity alignment between knowledge graphs")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Master seed. Overrides any seed in a configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Reproducible mode (the default). With `--deterministic false` and no
    /// `--seed`, a fresh seed is drawn and recorded in the manifest.
    #[arg(long, global = true, default_value_t = true, action = clap::ArgAction::Set)]
    pub deterministic: bool,
    /// Worker threads for parallel kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a benchmark dataset from two KGs and their reference alignment.
    Sample(SampleArgs),
    /// Structural statistics of a dataset as CSV.
    Stats(StatsArgs),
    /// Train embeddings on one fold.
    Train(TrainArgs),
    /// Predict an alignment from trained embeddings.
    Align(AlignArgs),
    /// Score a predicted alignment against the truth.
    Eval(EvalArgs),
    /// Embedding-geometry diagnostics (top-k similarity profile, hubness).
    Diagnose(DiagnoseArgs),
    /// Five-fold cross-validation; writes one CSV row per fold plus mean and std.
    Cv(CvArgs),
    /// Generate a synthetic pair of aligned power-law KGs.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ids,
    Ras,
    Prs,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct SampleArgs {
    /// Sampling method.
    #[arg(long, value_enum, default_value = "ids")]
    pub method: Method,
    /// KG1 relation triples (tab-separated head, relation, tail).
    #[arg(long)]
    pub kg1: PathBuf,
    /// KG2 relation triples.
    #[arg(long)]
    pub kg2: PathBuf,
    /// Reference alignment (tab-separated KG1 entity, KG2 entity).
    #[arg(long)]
    pub links: PathBuf,
    /// KG1 attribute triples, carried over for the sampled entities.
    #[arg(long)]
    pub attr1: Option<PathBuf>,
    /// KG2 attribute triples.
    #[arg(long)]
    pub attr2: Option<PathBuf>,
    /// Entities per KG in the sample.
    #[arg(long)]
    pub size: usize,
    /// Deletions per side per round (IDS only).
    #[arg(long, default_value_t = 100)]
    pub mu: usize,
    /// Bound on the JS divergence of each side's degree distribution (IDS only).
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    /// Additional runs allowed when the bound is missed (IDS only).
    #[arg(long, default_value_t = 5)]
    pub max_restarts: usize,
    /// Densify the source pair first (doubles the average degree).
    #[arg(long)]
    pub densify_v2: bool,
    /// Output dataset directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct StatsArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Also report JS divergence against this source dataset.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct TrainArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Fold to train on (1-based).
    #[arg(long, default_value_t = 1)]
    pub fold: usize,
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the maximum number of epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Output directory for embeddings, log and manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct InferenceArgs {
    /// Similarity metric: cosine, euclidean or manhattan.
    #[arg(long)]
    pub metric: Option<String>,
    /// Rescore with CSLS using K nearest neighbours (cosine only).
    #[arg(long, value_name = "K")]
    pub csls: Option<usize>,
    /// Matching strategy: greedy, stable or mwgm.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Largest side solved exactly by mwgm; bigger inputs use the heuristic.
    #[arg(long, value_name = "N")]
    pub exact_bound: Option<usize>,
    /// Candidate targets: test (test-pair targets) or all (every KG2 entity).
    #[arg(long, default_value = "test")]
    pub candidates: String,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct AlignArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory written by `train`.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Fold whose test sources are aligned (1-based).
    #[arg(long, default_value_t = 1)]
    pub fold: usize,
    #[command(flatten)]
    pub inference: InferenceArgs,
    /// Output directory for predictions.tsv and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct EvalArgs {
    /// Predicted alignment (source, target[, score]).
    #[arg(long)]
    pub pred: PathBuf,
    /// True alignment.
    #[arg(long)]
    pub truth: PathBuf,
    /// Also compute Hits@m, MR and MRR from these embeddings.
    #[arg(long, requires = "data")]
    pub embeddings: Option<PathBuf>,
    /// Dataset directory (with --embeddings).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub inference: InferenceArgs,
    /// Output directory for metrics.csv and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct DiagnoseArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory written by `train`.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub fold: usize,
    /// Length of the top-k similarity profile.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Output directory for geometry.csv and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct CvArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Candidate targets: test or all.
    #[arg(long, default_value = "test")]
    pub candidates: String,
    /// Output directory for results.csv and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub entities: usize,
    #[arg(long, default_value_t = 6.0)]
    pub avg_degree: f64,
    #[arg(long, default_value_t = 8)]
    pub relations: usize,
    /// Fraction of KG2 triples dropped.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Attribute triples per entity.
    #[arg(long, default_value_t = 0)]
    pub attributes: usize,
    /// Output dataset directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// 1 for bad input or configuration, 2 for failures at run time.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::MissingFile(_)
        | Error::Parse { .. }
        | Error::Validation(_)
        | Error::DimensionMismatch { .. }
        | Error::Empty(_)
        | Error::Config(_)
        | Error::Json(_) => 1,
        Error::Fold { source, .. } => exit_code(source),
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
