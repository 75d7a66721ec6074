//! `isr`: corpus generation, training, evaluation and baselines for the
//! interactive speaker recognition game.

mod layering;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "isr", version, about = "Interactive speaker recognition lab")]
struct Cli {
    /// Worker threads for rollouts and evaluation; 1 is the reproducibility mode.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `key = value` file supplying flags not given on the command line.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Use the paper's hyperparameters for every flag not set explicitly.
    #[arg(long, global = true)]
    paper_defaults: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus file and its config sidecar.
    GenCorpus(GenCorpusArgs),
    /// Train the guesser on random-word games.
    TrainGuesser(TrainGuesserArgs),
    /// Train the enquirer with PPO against a frozen guesser.
    TrainEnquirer(TrainEnquirerArgs),
    /// Evaluate policies, sweeps and word diversity.
    Eval(EvalArgs),
    /// Score words, curate a list and evaluate the heuristic policy.
    BaselineHeuristic(HeuristicArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SynthArgs {
    /// Embedding width D.
    #[arg(long, default_value_t = 32)]
    pub dimension: usize,
    /// Vocabulary size V.
    #[arg(long, default_value_t = 20)]
    pub vocab: usize,
    #[arg(long, default_value_t = 2000)]
    pub train_speakers: usize,
    #[arg(long, default_value_t = 60)]
    pub test_speakers: usize,
    /// Enrollment vectors per speaker.
    #[arg(long, default_value_t = 8)]
    pub enrollment: usize,
    /// Word-mix sharpness.
    #[arg(long, default_value_t = 3.0)]
    pub sharpness: f64,
    /// Utterance noise scale.
    #[arg(long, default_value_t = 1.5)]
    pub utterance_noise: f64,
    /// Enrollment noise scale.
    #[arg(long, default_value_t = 0.2)]
    pub enrollment_noise: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GenCorpusArgs {
    #[command(flatten)]
    pub synth: SynthArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output corpus file (JSON Lines); the config goes to `<out>.config.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CorpusArgs {
    /// Corpus file. Without it the default synthetic corpus is built in memory.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Seed of the in-memory synthetic corpus.
    #[arg(long, default_value_t = 0)]
    pub corpus_seed: u64,
    /// Training share of speakers when splitting a corpus file at random
    /// (default: the id split recorded in the sidecar, else 0.8).
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GameArgs {
    /// Guests per game K.
    #[arg(long, default_value_t = 5)]
    pub guests: usize,
    /// Words per game T.
    #[arg(long, default_value_t = 3)]
    pub words: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "ISR_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainGuesserArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub game: GameArgs,
    /// Random-word games per epoch [paper: 45000].
    #[arg(long, default_value_t = 45_000)]
    pub games: usize,
    /// Passes of fresh games [paper: 1].
    #[arg(long, default_value_t = 2)]
    pub epochs: usize,
    /// Minibatch size [paper: 1024].
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    /// Adam learning rate [paper: 3e-4].
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Optional global gradient-norm clip.
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// Held-out games scored after every epoch.
    #[arg(long, default_value_t = 10_000)]
    pub validation_games: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainEnquirerArgs {
    /// Guesser checkpoint that provides the reward.
    #[arg(long)]
    pub guesser: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub game: GameArgs,
    /// Training episodes [paper: 80000].
    #[arg(long, default_value_t = 40_000)]
    pub episodes: usize,
    /// Adam learning rate [paper: 5e-3].
    #[arg(long, default_value_t = 5e-3)]
    pub lr: f64,
    /// Discount [paper: 0.9].
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    /// GAE lambda [paper: 0.95].
    #[arg(long, default_value_t = 0.95)]
    pub gae_lambda: f64,
    /// PPO clip range [paper: 0.2].
    #[arg(long, default_value_t = 0.2)]
    pub clip: f64,
    /// Entropy bonus [paper: 0.01].
    #[arg(long, default_value_t = 0.01)]
    pub entropy_coef: f64,
    /// Value-loss weight.
    #[arg(long, default_value_t = 0.5)]
    pub value_coef: f64,
    /// Global gradient-norm clip [paper: 1].
    #[arg(long, default_value_t = 1.0)]
    pub grad_clip: f64,
    /// Transitions per rollout [paper: 1024].
    #[arg(long, default_value_t = 1024)]
    pub rollout: usize,
    /// Minibatch size [paper: 512].
    #[arg(long, default_value_t = 512)]
    pub minibatch: usize,
    /// Gradient steps per rollout [paper: 4].
    #[arg(long, default_value_t = 4)]
    pub minibatches: usize,
    /// Greedy held-out games played after training (0 to skip).
    #[arg(long, default_value_t = 5_000)]
    pub eval_games: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Random,
    Heuristic,
    Enquirer,
    Fixed,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepArg {
    Words,
    Guests,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitArg {
    Train,
    Test,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvalArgs {
    /// Guesser checkpoint, or `cosine` / `untrained` for the reference scorers.
    #[arg(long)]
    pub guesser: String,
    /// Enquirer checkpoint (needed for `--policy enquirer`).
    #[arg(long)]
    pub enquirer: Option<PathBuf>,
    /// Output of `baseline-heuristic`; otherwise the heuristic is scored here.
    #[arg(long)]
    pub heuristic: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PolicyKind::Random)]
    pub policy: PolicyKind,
    /// Comma-separated words (names or ids) for `--policy fixed`.
    #[arg(long, value_delimiter = ',')]
    pub fixed_words: Vec<String>,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Speakers the games are drawn from.
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[command(flatten)]
    pub game: GameArgs,
    /// Games per seed and grid point.
    #[arg(long, default_value_t = 10_000)]
    pub games: usize,
    /// Evaluation seeds [paper: five seeds].
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    pub seeds: Vec<u64>,
    #[arg(long, value_enum)]
    pub sweep: Option<SweepArg>,
    /// Grid of T (word sweep) or K (guest sweep) values.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<usize>,
    /// Also compute the diversity index (one game per speaker as target).
    #[arg(long)]
    pub diversity: bool,
    /// Games per word score when the heuristic is built here [paper: 20000].
    #[arg(long, default_value_t = 2_000)]
    pub eta: usize,
    /// Curated list size.
    #[arg(long, default_value_t = 6)]
    pub curated: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HeuristicArgs {
    /// Guesser checkpoint, or `cosine` for the reference scorer.
    #[arg(long)]
    pub guesser: String,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub game: GameArgs,
    /// Games per word score, drawn from training speakers [paper: 20000].
    #[arg(long, default_value_t = 2_000)]
    pub eta: usize,
    /// Curated list size.
    #[arg(long, default_value_t = 6)]
    pub curated: usize,
    /// Held-out games used to evaluate the curated policy.
    #[arg(long, default_value_t = 10_000)]
    pub eval_games: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

fn report(kind: &str, message: String) {
    let record = ErrorRecord {
        error: ErrorBody { kind, message },
    };
    eprintln!(
        "{}",
        serde_json::to_string(&record).expect("error record serializes")
    );
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    use isr_core::Error as E;
    match err.chain().find_map(|e| e.downcast_ref::<E>()) {
        Some(E::Config(_)) => "config",
        Some(E::Shape(_)) => "shape",
        Some(E::OutOfRange { .. }) => "out_of_range",
        Some(E::MissingCells(_)) | Some(E::Format(_)) => "corpus_format",
        Some(E::NonFiniteGradient(_)) | Some(E::NonFiniteRatio { .. }) => "numerical",
        Some(E::Divergence(_)) => "divergence",
        Some(E::Checkpoint(_)) => "checkpoint",
        Some(E::Io(_)) => "io",
        Some(E::Json(_)) | Some(E::Csv(_)) => "serialization",
        Some(_) => "game",
        None if err.chain().any(|e| e.is::<std::io::Error>()) => "io",
        None => "runtime",
    }
}

fn main() -> ExitCode {
    let argv = match layering::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            report("config", format!("{e:#}"));
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            report("usage", e.kind().to_string());
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            report("config", format!("cannot start {n} worker threads: {e}"));
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::GenCorpus(a) => run::gen_corpus(a),
        Command::TrainGuesser(a) => run::train_guesser(a),
        Command::TrainEnquirer(a) => run::train_enquirer(a),
        Command::Eval(a) => run::eval(a),
        Command::BaselineHeuristic(a) => run::baseline_heuristic(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(error_kind(&e), format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
