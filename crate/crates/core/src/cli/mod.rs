//! Command-line interface: argument parsing, configuration resolution and
//! the `train`, `evaluate`, `attack`, `explain` and `pipeline` commands.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_attack, cmd_evaluate, cmd_explain, cmd_pipeline, cmd_train, DriftSummary, PipelineOutcome,
};
pub use config::{require_file, RunConfig};

use crate::Result;

#[derive(Debug, Parser)]
#[command(name = "textshift", version, about = "Adversarial attacks and explanation drift for text classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a TF-IDF linear classifier and report train/test accuracy.
    Train(CommonArgs),
    /// Evaluate a saved model on the test split.
    Evaluate(CommonArgs),
    /// Attack a sample of test documents.
    Attack(CommonArgs),
    /// Explain one text with a local surrogate.
    Explain(ExplainArgs),
    /// Train, attack, explain before and after, and report drift.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of test documents to attack.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long)]
    pub max_queries: Option<u64>,
    /// Any configuration key, as KEY=VALUE. May be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Text to explain.
    #[arg(long, conflicts_with = "doc_id")]
    pub text: Option<String>,
    /// Explain the dataset document with this id instead.
    #[arg(long)]
    pub doc_id: Option<usize>,
    #[arg(long)]
    pub num_features: Option<usize>,
    #[arg(long)]
    pub num_samples: Option<usize>,
    #[arg(long)]
    pub target_class: Option<u8>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Load `--model` instead of training.
    #[arg(long)]
    pub skip_train: bool,
}

fn push<T: ToString>(pairs: &mut Vec<(String, String)>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        pairs.push((key.to_string(), v.to_string()));
    }
}

fn path_str(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.to_string_lossy().into_owned())
}

/// Resolves defaults, then the config file, then explicit flags.
pub fn resolve(common: &CommonArgs, extra: Vec<(String, String)>) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    if let Some(path) = &common.config {
        config.apply_file(path)?;
    }
    let mut pairs = Vec::new();
    push(&mut pairs, "dataset", path_str(&common.dataset));
    push(&mut pairs, "model", path_str(&common.model));
    push(&mut pairs, "embeddings", path_str(&common.embeddings));
    push(&mut pairs, "out", path_str(&common.out));
    push(&mut pairs, "seed", common.seed);
    push(&mut pairs, "sample", common.sample);
    push(&mut pairs, "max_queries", common.max_queries);
    for entry in &common.set {
        let (k, v) = entry.split_once('=').ok_or_else(|| {
            crate::Error::Config(format!("--set expects KEY=VALUE, got {entry:?}"))
        })?;
        pairs.push((k.to_string(), v.to_string()));
    }
    pairs.extend(extra);
    for (k, v) in pairs {
        config.set(&k, &v)?;
    }
    config.validate()?;
    Ok(config)
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(args) => cmd_train(&resolve(args, Vec::new())?).map(drop),
        Command::Evaluate(args) => cmd_evaluate(&resolve(args, Vec::new())?).map(drop),
        Command::Attack(args) => cmd_attack(&resolve(args, Vec::new())?).map(drop),
        Command::Explain(args) => {
            let mut extra = Vec::new();
            push(&mut extra, "text", args.text.clone());
            push(&mut extra, "doc_id", args.doc_id);
            push(&mut extra, "num_features", args.num_features);
            push(&mut extra, "num_samples", args.num_samples);
            push(&mut extra, "target_class", args.target_class);
            cmd_explain(&resolve(&args.common, extra)?).map(drop)
        }
        Command::Pipeline(args) => {
            let mut extra = Vec::new();
            if args.skip_train {
                extra.push(("skip_train".to_string(), "true".to_string()));
            }
            cmd_pipeline(&resolve(&args.common, extra)?).map(drop)
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}
