//! `pathgpt` command-line entry point.
//!
//! Exit codes: 0 on success (a fallback route counts), 1 when no route
//! exists, 2 on bad input or I/O failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::OdSource;
use pathgpt::eval::Task;

#[derive(Debug, Parser)]
#[command(name = "pathgpt", version, about = "Retrieval-augmented path recommendation")]
pub struct Cli {
    /// Experiment config file.
    #[arg(long, global = true, default_value = "pathgpt.toml")]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Evaluation worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory; defaults to the config's kb_dir.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the corpus, BM25 index and vector file.
    BuildKb,
    /// Show the documents retrieved for a query.
    Retrieve(RetrieveArgs),
    /// Recommend a route for one origin-destination pair.
    Recommend(RecommendArgs),
    /// Write ground-truth samples for a task.
    GenTruth(GenTruthArgs),
    /// Evaluate against ground-truth samples.
    Evaluate(EvaluateArgs),
    /// Latency breakdown CSV over all evaluation runs in the output directory.
    Report,
    /// Generate a synthetic city dataset with a matching config.
    SynthCity(SynthArgs),
}

#[derive(Debug, Args)]
pub struct OdArgs {
    /// Origin node id.
    #[arg(long, conflicts_with = "from")]
    pub origin: Option<u64>,
    /// Destination node id.
    #[arg(long, conflicts_with = "to")]
    pub destination: Option<u64>,
    /// Origin as `lat,lon`, snapped to the nearest node.
    #[arg(long)]
    pub from: Option<String>,
    /// Destination as `lat,lon`.
    #[arg(long)]
    pub to: Option<String>,
    #[arg(long, default_value = "fastest")]
    pub constraints: String,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    /// Free-text query. Without it the query is built from the OD flags.
    #[arg(long)]
    pub query: Option<String>,
    #[command(flatten)]
    pub od: OdArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub k_prime: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub od: OdArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub k_prime: Option<usize>,
    /// Prompt without retrieved context.
    #[arg(long)]
    pub base_llm: bool,
}

#[derive(Debug, Args)]
pub struct GenTruthArgs {
    #[arg(long)]
    pub task: Task,
    /// Maximum number of samples; defaults to the config's eval.samples.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub od_source: Option<OdSourceArg>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum OdSourceArg {
    HeldOut,
    Random,
}

impl From<OdSourceArg> for OdSource {
    fn from(a: OdSourceArg) -> Self {
        match a {
            OdSourceArg::HeldOut => OdSource::HeldOut,
            OdSourceArg::Random => OdSource::Random,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub task: Task,
    /// Context size; repeat for several runs.
    #[arg(long)]
    pub k: Vec<usize>,
    #[arg(long)]
    pub k_prime: Option<usize>,
    #[arg(long)]
    pub base_llm: bool,
    /// Sample file; defaults to `samples_{task}.jsonl` in the output directory.
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    pub rows: usize,
    #[arg(long, default_value_t = 20)]
    pub cols: usize,
    #[arg(long, default_value_t = 200)]
    pub od_pairs: usize,
    #[arg(long, default_value_t = 20)]
    pub duplicates: usize,
    #[arg(long, default_value_t = 50)]
    pub held_out: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::NoRoute>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
