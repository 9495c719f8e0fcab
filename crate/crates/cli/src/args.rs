use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pclones::metrics::DEFAULT_LEVELS;
use pclones::recall::DEFAULT_SEED_LEN;
use pclones::FeedbackMode;

#[derive(Debug, Parser)]
#[command(name = "pclones", version, about = "Parallel-clones training for a character-level recurrent network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the target (parallel clones) or regular (online) model.
    Train(TrainArgs),
    /// Seed a checkpoint with the corpus prefix and score free-running output.
    Recall(RecallArgs),
    /// Plot loss surfaces and compute statistics for one or more runs.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Target,
    Regular,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Target => "target",
            Mode::Regular => "regular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Preset {
    /// 500-character corpus, 499 clones, 100 iterations.
    #[default]
    Paper,
    /// First 100 characters of the corpus, 99 clones, 10 iterations.
    Smoke,
    /// Paper defaults without the corpus size check.
    Custom,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::Smoke => "smoke",
            Preset::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Feedback {
    Raw,
    Onehot,
}

impl From<Feedback> for FeedbackMode {
    fn from(f: Feedback) -> Self {
        match f {
            Feedback::Raw => FeedbackMode::Raw,
            Feedback::Onehot => FeedbackMode::OneHot,
        }
    }
}

/// Where the training text comes from.
#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Corpus file; defaults to the bundled 500-character excerpt.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Convert CRLF line endings to LF when reading --corpus.
    #[arg(long)]
    pub normalize_crlf: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = Mode::Target)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Preset::Paper)]
    pub preset: Preset,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Weight initialisation seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub clones: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Hidden layer width.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Save a checkpoint every K iterations (0 disables).
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Run directory. Regular-mode output goes to its `regular/` subdirectory.
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
    /// Measure the regular model alongside every training step instead of
    /// once per iteration.
    #[arg(long)]
    pub measure_every_step: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RecallArgs {
    /// Checkpoint to load.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Truncate the corpus to this many characters; taken from the run
    /// manifest when present.
    #[arg(long)]
    pub corpus_length: Option<usize>,
    #[arg(long, value_enum, default_value_t = Feedback::Raw)]
    pub feedback: Feedback,
    #[arg(long, default_value_t = DEFAULT_SEED_LEN)]
    pub seed_length: usize,
    /// Report path; defaults to `recall_<feedback>.txt` beside the checkpoint.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Run directories, each holding a loss_surface.csv.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// History levels (from 0) used for plots and the rank correlation.
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    pub levels: usize,
    #[arg(long, default_value = "analysis")]
    pub out: PathBuf,
}
