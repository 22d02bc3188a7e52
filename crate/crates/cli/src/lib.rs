//! Command-line front end of the review mining pipeline.
//!
//! Every batch subcommand writes its fully resolved [`RunConfig`] next to its
//! artifacts as `run_config.json`; `reviewscope replay --config <file>` runs
//! it again.

pub mod commands;
pub mod server;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use reviewscope::eval::{CvKind, Method};
use reviewscope::features::Word2VecConfig;
use reviewscope::models::{CnnConfig, SvmConfig};
use reviewscope::LabelGroup;

pub const RUN_CONFIG_FILE: &str = "run_config.json";

#[derive(Parser, Debug, Clone)]
#[command(name = "reviewscope", version, about = "Mine, label, classify and evaluate product review sentences")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalOpts {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Base directory for relative input paths; the project store for `serve`.
    #[arg(long, global = true, env = "REVIEWSCOPE_DATA")]
    pub data_dir: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl GlobalOpts {
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Absolute form of an input path, relative ones taken from the data
    /// directory when it is set.
    pub fn input(&self, path: &Path) -> Result<PathBuf> {
        let joined = match &self.data_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        };
        std::path::absolute(&joined).with_context(|| format!("resolving {}", joined.display()))
    }
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Write the synthetic six-product corpus and its labels.
    Fixtures(FixturesArgs),
    /// Sample, segment and preprocess a review export into sentences.
    Ingest(IngestArgs),
    /// Category frequencies of a labeled-sentence file.
    Distribution(DistributionArgs),
    /// Pretrain skip-gram word embeddings.
    TrainW2v(TrainW2vArgs),
    /// Train a classifier on every labeled sentence.
    Train(TrainArgs),
    /// Cross-validate one method on one label group.
    Evaluate(EvaluateArgs),
    /// Merge evaluation reports into paper-style tables.
    Report(ReportArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
    /// Rerun a logged run configuration.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fixtures(_) => "fixtures",
            Command::Ingest(_) => "ingest",
            Command::Distribution(_) => "distribution",
            Command::TrainW2v(_) => "train-w2v",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Report(_) => "report",
            Command::Serve(_) => "serve",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixturesArgs {
    /// Unlabeled reviews written for embedding pretraining.
    #[arg(long, default_value_t = 4000)]
    pub unlabeled: usize,
    /// Size of the good/great/zebra co-occurrence corpus.
    #[arg(long, default_value_t = 200_000)]
    pub cooccurrence_tokens: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestArgs {
    /// Review export (JSONL or CSV).
    #[arg(long)]
    pub reviews: PathBuf,
    /// Input format; guessed from the extension when absent.
    #[arg(long)]
    pub format: Option<reviewscope::ReviewFormat>,
    /// Product catalog (JSON list of {product_id, name, domain}).
    #[arg(long)]
    pub products: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub per_star: usize,
    #[arg(long, default_value_t = 20)]
    pub max_sentences: usize,
    /// Keep reviews without the verified-purchase flag.
    #[arg(long)]
    pub include_unverified: bool,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionArgs {
    /// Labeled-sentence JSONL.
    #[arg(long)]
    pub labels: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainW2vArgs {
    /// Review files; every review is segmented and preprocessed.
    #[arg(long)]
    pub reviews: Vec<PathBuf>,
    /// Sentence JSONL files produced by `ingest`.
    #[arg(long)]
    pub sentences: Vec<PathBuf>,
    /// Plain text, one whitespace-tokenized sentence per line.
    #[arg(long)]
    pub tokens: Vec<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub min_count: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub subsample: f64,
    #[arg(long, default_value_t = 0.025)]
    pub lr: f64,
    /// Worker threads; only one worker gives bit-identical tables.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

impl TrainW2vArgs {
    pub fn config(&self, seed: u64) -> Word2VecConfig {
        Word2VecConfig {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            min_count: self.min_count,
            subsample: self.subsample,
            lr: self.lr,
            workers: self.workers,
            seed,
        }
    }
}

/// Classifier hyperparameters shared by `train` and `evaluate`.
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArgs {
    /// SVM soft-margin constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 30)]
    pub svm_epochs: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub svm_tol: f64,
    #[arg(long, default_value_t = 10)]
    pub cnn_epochs: usize,
    #[arg(long, default_value_t = 50)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 60)]
    pub max_len: usize,
    #[arg(long, default_value_t = 100)]
    pub feature_maps: usize,
    #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
    pub windows: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
}

impl ModelArgs {
    pub fn svm(&self, seed: u64) -> SvmConfig {
        SvmConfig { c: self.c, epochs: self.svm_epochs, tol: self.svm_tol, seed }
    }

    pub fn cnn(&self, seed: u64) -> CnnConfig {
        CnnConfig {
            max_len: self.max_len,
            windows: self.windows.clone(),
            feature_maps: self.feature_maps,
            dropout: self.dropout,
            batch_size: self.batch_size,
            epochs: self.cnn_epochs,
            lr: self.lr,
            seed,
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Sentence JSONL from `ingest`.
    #[arg(long)]
    pub sentences: PathBuf,
    /// Labeled-sentence JSONL.
    #[arg(long)]
    pub labels: PathBuf,
    /// `top` or `software`.
    #[arg(long, default_value = "top")]
    pub group: LabelGroup,
    #[arg(long, default_value = "svm-tfidf")]
    pub method: Method,
    /// Embedding table (text format) for the w2v methods.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub sentences: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value = "top")]
    pub group: LabelGroup,
    #[arg(long, default_value = "svm-tfidf")]
    pub method: Method,
    /// `kfold10` or `product6`.
    #[arg(long, default_value = "kfold10")]
    pub cv: CvKind,
    /// Number of folds for `kfold10`.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Product catalog, for product names in the Markdown table.
    #[arg(long)]
    pub products: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportArgs {
    /// `report.json` files written by `evaluate`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub products: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServeArgs {
    #[arg(long, env = "REVIEWSCOPE_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Project to create on startup if it does not exist yet.
    #[arg(long, requires = "sentences")]
    pub project: Option<String>,
    /// Sentence JSONL for the new project.
    #[arg(long, requires = "project")]
    pub sentences: Option<PathBuf>,
    /// Annotator ids of the new project.
    #[arg(long, value_delimiter = ',')]
    pub annotators: Vec<String>,
    #[arg(long, default_value_t = reviewscope::annotate::DEFAULT_DAILY_QUOTA)]
    pub quota: u32,
    /// Static files of the annotation UI, served at `/`.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// A `run_config.json` written by an earlier run. The logged seed and
    /// paths are used; `--out` redirects the artifacts.
    #[arg(long)]
    pub config: PathBuf,
}

/// What a run did, with every default and path resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tool_version: String,
    pub global: GlobalOpts,
    pub command: Command,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(dir.join(RUN_CONFIG_FILE), text)?;
        Ok(())
    }
}

fn resolve_all(global: &GlobalOpts, paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    paths.iter().map(|p| global.input(p)).collect()
}

fn resolve_opt(global: &GlobalOpts, path: &Option<PathBuf>) -> Result<Option<PathBuf>> {
    path.as_deref().map(|p| global.input(p)).transpose()
}

/// Resolve relative paths and the output directory so the logged config does
/// not depend on the working directory.
pub fn resolve(global: &GlobalOpts, command: &Command) -> Result<RunConfig> {
    let mut command = command.clone();
    match &mut command {
        Command::Fixtures(_) | Command::Replay(_) => {}
        Command::Ingest(a) => {
            a.reviews = global.input(&a.reviews)?;
            a.products = resolve_opt(global, &a.products)?;
            if a.format.is_none() {
                a.format = Some(reviewscope::ReviewFormat::from_path(&a.reviews));
            }
        }
        Command::Distribution(a) => a.labels = global.input(&a.labels)?,
        Command::TrainW2v(a) => {
            a.reviews = resolve_all(global, &a.reviews)?;
            a.sentences = resolve_all(global, &a.sentences)?;
            a.tokens = resolve_all(global, &a.tokens)?;
        }
        Command::Train(a) => {
            a.sentences = global.input(&a.sentences)?;
            a.labels = global.input(&a.labels)?;
            a.embeddings = resolve_opt(global, &a.embeddings)?;
        }
        Command::Evaluate(a) => {
            a.sentences = global.input(&a.sentences)?;
            a.labels = global.input(&a.labels)?;
            a.embeddings = resolve_opt(global, &a.embeddings)?;
            a.products = resolve_opt(global, &a.products)?;
        }
        Command::Report(a) => {
            a.reports = resolve_all(global, &a.reports)?;
            a.products = resolve_opt(global, &a.products)?;
        }
        Command::Serve(a) => {
            a.sentences = resolve_opt(global, &a.sentences)?;
            a.ui_dir = resolve_opt(global, &a.ui_dir)?;
        }
    }
    let data_dir = global.data_dir.as_deref().map(std::path::absolute).transpose()?;
    let out = std::path::absolute(global.out_dir())?;
    Ok(RunConfig {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        global: GlobalOpts { seed: global.seed, data_dir, out: Some(out) },
        command,
    })
}

/// Checks clap cannot express; returns the message for a usage error.
pub fn usage_problem(cli: &Cli) -> Option<String> {
    match &cli.command {
        Command::Serve(_) if cli.global.data_dir.is_none() => {
            Some("`serve` needs a project directory: pass --data-dir or set REVIEWSCOPE_DATA".into())
        }
        _ => None,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(problem) = usage_problem(&cli) {
        bail!(problem);
    }
    if let Command::Replay(a) = &cli.command {
        let mut cfg = RunConfig::load(&cli.global.input(&a.config)?)?;
        if matches!(cfg.command, Command::Replay(_)) {
            bail!("a replay config cannot name another replay");
        }
        if let Some(out) = &cli.global.out {
            cfg.global.out = Some(std::path::absolute(out)?);
        }
        println!("replaying `{}` from {}", cfg.command.name(), a.config.display());
        return execute(&cfg);
    }
    let cfg = resolve(&cli.global, &cli.command)?;
    execute(&cfg)
}

/// Run a resolved configuration and log it next to the artifacts.
pub fn execute(cfg: &RunConfig) -> Result<()> {
    let out = cfg.global.out_dir();
    match &cfg.command {
        Command::Serve(a) => {
            let data_dir = cfg
                .global
                .data_dir
                .clone()
                .context("`serve` needs --data-dir or REVIEWSCOPE_DATA")?;
            cfg.save(&data_dir)?;
            server::serve(&data_dir, a)
        }
        Command::Replay(_) => bail!("nested replay"),
        command => {
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            match command {
                Command::Fixtures(a) => commands::fixtures(&cfg.global, a, &out)?,
                Command::Ingest(a) => commands::ingest(&cfg.global, a, &out)?,
                Command::Distribution(a) => commands::distribution(a, &out)?,
                Command::TrainW2v(a) => commands::train_w2v(&cfg.global, a, &out)?,
                Command::Train(a) => commands::train(&cfg.global, a, &out)?,
                Command::Evaluate(a) => commands::evaluate(&cfg.global, a, &out)?,
                Command::Report(a) => commands::report(a, &out)?,
                Command::Serve(_) | Command::Replay(_) => unreachable!(),
            }
            cfg.save(&out)?;
            println!("wrote {}", out.join(RUN_CONFIG_FILE).display());
            Ok(())
        }
    }
}
