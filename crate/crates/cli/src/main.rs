use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod settings;
mod tables;

use settings::Settings;

/// Lexical semantic change detection across time-sliced corpora.
#[derive(Parser)]
#[command(name = "semshift", version)]
struct Cli {
    /// Key-value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(flatten)]
    flags: SettingFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct SettingFlags {
    /// Corpus file (NDJSON: id, text, date).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Instance-pair file (NDJSON).
    #[arg(long, global = true)]
    pairs: Option<PathBuf>,
    /// Labelled pairs for threshold selection.
    #[arg(long, global = true)]
    train_pairs: Option<PathBuf>,
    /// Annotation CSV (word,score).
    #[arg(long, global = true)]
    annotations: Option<PathBuf>,
    /// Contextual embedding exchange file.
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// year or month.
    #[arg(long, global = true)]
    granularity: Option<String>,
    /// Comma-separated target words.
    #[arg(long, global = true)]
    targets: Option<String>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    shift_k: Option<f64>,
    #[arg(long, global = true)]
    negatives: Option<usize>,
    #[arg(long, global = true)]
    window: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    /// no_date, date or qiq.
    #[arg(long, global = true)]
    template: Option<String>,
    /// mock or http.
    #[arg(long, global = true)]
    backend: Option<String>,
    #[arg(long, global = true)]
    endpoint: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, global = true)]
    api_key_env: Option<String>,
    #[arg(long, global = true)]
    max_retries: Option<u32>,
    #[arg(long, global = true)]
    backoff_ms: Option<u64>,
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    #[arg(long, global = true)]
    timeout_ms: Option<u64>,
    /// Cross-slice pairs per target word.
    #[arg(long, global = true)]
    pair_cap: Option<usize>,
    /// Fixed decision threshold for instance-level evaluation.
    #[arg(long, global = true)]
    threshold: Option<f64>,
}

impl SettingFlags {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        fn push<T: ToString>(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<T>) {
            if let Some(v) = v {
                out.push((key, v.to_string()));
            }
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let mut out = Vec::new();
        push(&mut out, "corpus", &path(&self.corpus));
        push(&mut out, "pairs", &path(&self.pairs));
        push(&mut out, "train_pairs", &path(&self.train_pairs));
        push(&mut out, "annotations", &path(&self.annotations));
        push(&mut out, "embeddings", &path(&self.embeddings));
        push(&mut out, "granularity", &self.granularity);
        push(&mut out, "targets", &self.targets);
        push(&mut out, "dim", &self.dim);
        push(&mut out, "alpha", &self.alpha);
        push(&mut out, "shift_k", &self.shift_k);
        push(&mut out, "negatives", &self.negatives);
        push(&mut out, "window", &self.window);
        push(&mut out, "epochs", &self.epochs);
        push(&mut out, "lr", &self.lr);
        push(&mut out, "template", &self.template);
        push(&mut out, "backend", &self.backend);
        push(&mut out, "endpoint", &self.endpoint);
        push(&mut out, "model", &self.model);
        push(&mut out, "api_key_env", &self.api_key_env);
        push(&mut out, "max_retries", &self.max_retries);
        push(&mut out, "backoff_ms", &self.backoff_ms);
        push(&mut out, "parallelism", &self.parallelism);
        push(&mut out, "timeout_ms", &self.timeout_ms);
        push(&mut out, "pair_cap", &self.pair_cap);
        push(&mut out, "threshold", &self.threshold);
        out
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScoreMethod {
    Ppmi,
    Sgns,
    Contextual,
    Llm,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepMethod {
    Ppmi,
    Sgns,
}

#[derive(Subcommand)]
enum Command {
    /// Load inputs and print slice, vocabulary and pair statistics.
    Ingest,
    /// Write per-frame change score tables.
    Score {
        #[arg(long, value_enum)]
        method: ScoreMethod,
        /// Also save per-slice embeddings (ppmi, sgns).
        #[arg(long)]
        save_embeddings: bool,
    },
    /// Correlate score tables with annotations and classify instance pairs.
    Eval {
        /// Score tables written by `score`.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        scores: Vec<PathBuf>,
        /// Instance distances for --pairs.
        #[arg(long)]
        distances: Option<PathBuf>,
        /// Instance distances for --train-pairs, used to pick the threshold.
        #[arg(long)]
        train_distances: Option<PathBuf>,
        /// Verdict log from `judge` for --pairs.
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
    /// Score a hyperparameter grid, one row per setting and frame.
    Sweep {
        #[arg(long, value_enum)]
        method: SweepMethod,
        /// Dimensions (ppmi: any of 100,200,300,400,500).
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        /// Negative-sample counts (sgns).
        #[arg(long, value_delimiter = ',')]
        negatives_grid: Vec<usize>,
    },
    /// Judge instance pairs with the LLM backend; reruns resume.
    Judge {
        /// Verdict log (default: <out>/verdicts_<template>.ndjson).
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

fn method_name<T: ValueEnum>(m: &T) -> String {
    m.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut overrides = cli.flags.overrides();
    if let Some(seed) = cli.seed {
        overrides.push(("seed", seed.to_string()));
    }
    if let Some(out) = &cli.out {
        overrides.push(("out", out.display().to_string()));
    }
    match &cli.command {
        Command::Score { method, .. } => overrides.push(("method", method_name(method))),
        Command::Sweep { method, .. } => overrides.push(("method", method_name(method))),
        _ => {}
    }
    let settings = Settings::resolve(cli.config.as_deref(), overrides)?;
    log::debug!("config hash {}", settings.config_hash());
    match cli.command {
        Command::Ingest => commands::ingest(&settings),
        Command::Score {
            method,
            save_embeddings,
        } => commands::score(&settings, &method_name(&method), save_embeddings),
        Command::Eval {
            scores,
            distances,
            train_distances,
            verdicts,
        } => commands::eval(
            &settings,
            &scores,
            distances.as_deref(),
            train_distances.as_deref(),
            verdicts.as_deref(),
        ),
        Command::Sweep {
            method,
            dims,
            negatives_grid,
        } => commands::sweep(&settings, &method_name(&method), &dims, &negatives_grid),
        Command::Judge { log } => commands::judge(&settings, log.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
