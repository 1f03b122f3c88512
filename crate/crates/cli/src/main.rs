mod commands;
mod config;
mod model;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};

use crate::config::ConfigFile;

/// Parallel sentence extraction from comparable corpora.
///
/// Exit status: 0 on success, 1 when a command fails while running, 2 on
/// usage or configuration errors (bad flags, unreadable inputs, invalid
/// models). Set BITEXT_LOG (error, warn, info, debug) to control logging.
#[derive(Debug, Parser)]
#[command(name = "bitext", version, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a scorer on a line-aligned parallel corpus.
    Train(TrainArgs),
    /// Extract parallel sentences from comparable document pairs.
    Extract(ExtractArgs),
    /// Precision/recall curves on a test corpus with injected noise.
    Evaluate(EvalArgs),
    /// Optimal-F1 summary across noise ratios.
    Sweep(EvalArgs),
    /// Train IBM Model 1/2 alignment tables in both directions.
    AlignTrain(AlignArgs),
    /// Infer bilingual dictionaries from alignment tables.
    Dict(DictArgs),
    /// Run the built-in gradient, metric and oracle checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Read defaults from a `key = value` file; flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads; 1 keeps every run bit-reproducible.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Random seed; generated and logged when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Source side of the training corpus, one sentence per line.
    #[arg(long)]
    pub src: PathBuf,
    /// Target side, line-aligned with --src.
    #[arg(long)]
    pub tgt: PathBuf,
    /// Output model path.
    #[arg(long)]
    pub model: PathBuf,
    /// Scorer to train: birnn or baseline.
    #[arg(long, default_value = "birnn")]
    pub scorer: String,
    /// Negative pairs per positive pair, resampled every epoch.
    #[arg(long, default_value_t = 7)]
    pub negatives: usize,
    /// Passes over the training corpus.
    #[arg(long, default_value_t = 15)]
    pub epochs: usize,
    /// Minibatch size in training examples.
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 0.0002)]
    pub lr: f64,
    /// Decision threshold stored with the model.
    #[arg(long, default_value_t = 0.99)]
    pub rho: f64,
    /// Word embedding size.
    #[arg(long, default_value_t = 512)]
    pub emb: usize,
    /// GRU state size.
    #[arg(long, default_value_t = 512)]
    pub hidden: usize,
    /// Size of the hidden layer of the pair classifier.
    #[arg(long, default_value_t = 256)]
    pub head: usize,
    /// Dropout rate on embeddings.
    #[arg(long, default_value_t = 0.2)]
    pub drop_in: f64,
    /// Dropout rate on sentence encodings.
    #[arg(long, default_value_t = 0.3)]
    pub drop_out: f64,
    /// Global gradient-norm clipping threshold.
    #[arg(long, default_value_t = 5.0)]
    pub clip_norm: f64,
    /// Keep only this many most frequent words per language.
    #[arg(long)]
    pub max_vocab: Option<usize>,
    /// Model 1 EM iterations (baseline).
    #[arg(long, default_value_t = 5)]
    pub ibm1_iters: usize,
    /// Model 2 EM iterations (baseline).
    #[arg(long, default_value_t = 5)]
    pub ibm2_iters: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trained model.
    #[arg(long)]
    pub model: PathBuf,
    /// Document pairs as JSON lines: {"doc_id": .., "src": [..], "tgt": [..]}.
    #[arg(long)]
    pub docs: PathBuf,
    /// Output TSV: score, document id, source sentence, target sentence.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the extraction report as JSON here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Decision threshold; defaults to the model's.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Minimum sentence length in tokens on both sides.
    #[arg(long, default_value_t = 3)]
    pub min_tokens: usize,
    /// Candidate filtering (true or false); defaults to on for the baseline only.
    #[arg(long)]
    pub filters: Option<bool>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trained model (not needed with --oracle).
    #[arg(long, required_unless_present = "oracle")]
    pub model: Option<PathBuf>,
    /// Source side of the test corpus.
    #[arg(long)]
    pub src: PathBuf,
    /// Target side of the test corpus.
    #[arg(long)]
    pub tgt: PathBuf,
    /// Target-language sentences used as noise, one per line.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Comma-separated noise ratios in [0, 1).
    #[arg(long, value_parser = parse_list, default_value = "0")]
    pub ratios: FloatList,
    /// Comma-separated ascending thresholds; defaults to 0.01..0.99 and 0.995..0.999999.
    #[arg(long, value_parser = parse_list)]
    pub thresholds: Option<FloatList>,
    /// Write the report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Measure thresholded pairs before greedy one-to-one selection.
    #[arg(long)]
    pub pre_greedy: bool,
    /// Score with a perfect oracle built from the test corpus.
    #[arg(long)]
    pub oracle: bool,
    /// Candidate filtering (true or false); defaults to on for the baseline only.
    #[arg(long)]
    pub filters: Option<bool>,
}

#[derive(Debug, Clone, Args)]
pub struct AlignArgs {
    #[command(flatten)]
    pub common: Common,
    /// Source side of the corpus, one sentence per line.
    #[arg(long)]
    pub src: PathBuf,
    /// Target side, line-aligned with --src.
    #[arg(long)]
    pub tgt: PathBuf,
    /// Output directory for vocabularies, tables and likelihood traces.
    #[arg(long)]
    pub out: PathBuf,
    /// Model 1 EM iterations.
    #[arg(long, default_value_t = 5)]
    pub ibm1_iters: usize,
    /// Model 2 EM iterations.
    #[arg(long, default_value_t = 5)]
    pub ibm2_iters: usize,
    /// Keep only this many most frequent words per language.
    #[arg(long)]
    pub max_vocab: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DictArgs {
    #[command(flatten)]
    pub common: Common,
    /// Directory written by align-train.
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory; defaults to --model.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep pairs whose translation probability exceeds this.
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

fn parse_list(s: &str) -> Result<FloatList, String> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| format!("'{x}' is not a number"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(FloatList)
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Train(a) => &a.common,
            Command::Extract(a) => &a.common,
            Command::Evaluate(a) | Command::Sweep(a) => &a.common,
            Command::AlignTrain(a) => &a.common,
            Command::Dict(a) => &a.common,
            Command::Selftest(a) => &a.common,
        }
    }
}

/// A failed command and the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

pub trait UsageExt<T> {
    /// Classifies an error as a usage or configuration problem.
    fn usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> UsageExt<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
}

/// Inserts the config file's arguments right after the subcommand name,
/// ahead of the explicit flags.
fn with_config(argv: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (k, a) in args.iter().enumerate().skip(2) {
        if let Some(v) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(v));
        } else if a == "--config" {
            path = args.get(k + 1).map(PathBuf::from);
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let cmd = Cli::command();
    let Some(sub) = args.get(1).and_then(|name| cmd.find_subcommand(name)) else {
        return Ok(argv);
    };
    let bools: Vec<&str> = sub
        .get_arguments()
        .filter(|a| matches!(a.get_action(), ArgAction::SetTrue))
        .filter_map(|a| a.get_long())
        .collect();
    let extra = ConfigFile::load(&path)
        .and_then(|c| c.args_for(sub.get_name(), &bools))
        .usage()?;
    let mut out = argv[..2].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend(argv[2..].iter().cloned());
    Ok(out)
}

fn run(argv: Vec<OsString>) -> Result<(), Failure> {
    let argv = with_config(argv)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let threads = cli.command.common().threads;
    if threads == 0 {
        return Err(Failure::Usage(anyhow::anyhow!("--threads must be at least 1")));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(anyhow::Error::from)?;
    match cli.command {
        Command::Train(a) => commands::train(&a),
        Command::Extract(a) => commands::extract(&a),
        Command::Evaluate(a) => commands::evaluate(&a, false),
        Command::Sweep(a) => commands::evaluate(&a, true),
        Command::AlignTrain(a) => commands::align_train(&a),
        Command::Dict(a) => commands::dict(&a),
        Command::Selftest(a) => commands::selftest(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BITEXT_LOG", "info"))
        .format_timestamp(None)
        .init();
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
