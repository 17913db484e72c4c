//! `herodraft`: train reward models, run tournaments and sweeps, recommend
//! picks for a draft in progress, and serve the draft-session API.

mod commands;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

const STRATEGY_HELP: &str = "\
Strategy specs:
  rd              uniform random legal hero
  hwr             highest historical win rate (needs --data)
  ar[:CAP]        association rules, candidate pool capped at CAP (default 5; needs --rules)
  uct:N[:C]       UCT with N iterations and exploration constant C (default 1)
  uct:MSms[:C]    UCT with a wall-clock budget of MS milliseconds

Example: herodraft tournament --a uct:800:0.5 --b rd --sims 1000 --seed 1";

#[derive(Parser, Debug)]
#[command(name = "herodraft", version, about, after_help = STRATEGY_HELP)]
pub struct Cli {
    /// Print one JSON document to stdout instead of human-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic match dataset from a ground-truth model.
    Synth(SynthArgs),
    /// Train a reward model on a match dataset.
    Train(TrainArgs),
    /// Score a reward model on a match dataset.
    Eval(EvalArgs),
    /// Mine ally and enemy association rules from a match dataset.
    Mine(MineArgs),
    /// Play strategies against each other in simulated drafts.
    #[command(after_help = STRATEGY_HELP)]
    Tournament(TournamentArgs),
    /// Compare UCT exploration constants against a benchmark constant.
    Sweep(SweepArgs),
    /// Recommend the next hero for a draft in progress.
    Recommend(RecommendArgs),
    /// Run the HTTP draft-session service.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Ground-truth model file; a random one is generated when absent.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 111)]
    pub heroes: usize,
    /// Synergy and opposition pairs of the random truth, each.
    #[arg(long, default_value_t = 60)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0.3)]
    pub base_range: f64,
    #[arg(long, default_value_t = 1.0)]
    pub pair_magnitude: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    /// Seed of the random truth; defaults to --seed.
    #[arg(long)]
    pub truth_seed: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    pub matches: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSONL dataset.
    #[arg(long)]
    pub out: PathBuf,
    /// Also save the ground-truth model here.
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// mc, lr or nn.
    #[arg(long, default_value = "nn")]
    pub kind: String,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,
    /// Share of the training input held out for the model's validation report.
    #[arg(long, default_value_t = 0.1)]
    pub validation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Share of the data split off before training and never trained on.
    #[arg(long, default_value_t = 0.0)]
    pub holdout: f64,
    /// Where to write the held-out split, for a later `eval`.
    #[arg(long, requires = "holdout")]
    pub test_out: Option<PathBuf>,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, env = "HERODRAFT_MODEL")]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Args, Debug)]
pub struct MineArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.001)]
    pub min_support: f64,
    #[arg(long, default_value_t = 3)]
    pub max_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Inputs shared by tournaments and sweeps.
#[derive(Args, Debug)]
pub struct SimArgs {
    /// Reward model scoring finished drafts and guiding UCT.
    #[arg(long, env = "HERODRAFT_MODEL")]
    pub model: PathBuf,
    /// `all_pick`, `captain_mode` or a schedule file.
    #[arg(long, default_value = "all_pick")]
    pub schedule: String,
    #[arg(long, default_value_t = 1000)]
    pub sims: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Match dataset: hero statistics for hwr and first-action weights.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Sample the first action uniformly even when --data is given.
    #[arg(long)]
    pub uniform_first: bool,
    /// Keep A on Radiant in every simulation.
    #[arg(long)]
    pub no_swap: bool,
    /// Run simulations on one thread.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Args, Debug)]
pub struct TournamentArgs {
    #[arg(long, requires = "b", conflicts_with = "strategies")]
    pub a: Option<String>,
    #[arg(long, requires = "a")]
    pub b: Option<String>,
    /// Round robin over these strategies.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<String>>,
    /// Mined rules for ar.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Write the win-rate matrix as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write full per-simulation traces as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub iters: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "0.125,0.25,0.5,1,2")]
    pub cs: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub benchmark_c: f64,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RecommendArgs {
    /// Partial draft: schedule plus the actions taken so far.
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, env = "HERODRAFT_MODEL")]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1600)]
    pub iters: u64,
    /// Wall-clock budget in milliseconds instead of --iters.
    #[arg(long)]
    pub millis: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Model registered as `default`.
    #[arg(long, env = "HERODRAFT_MODEL")]
    pub model: PathBuf,
    /// Further models as NAME=FILE.
    #[arg(long = "extra-model")]
    pub extra_models: Vec<String>,
    /// JSON array of hero names, indexed by hero id.
    #[arg(long)]
    pub hero_names: Option<PathBuf>,
    /// Append-only session log, replayed on start.
    #[arg(long)]
    pub session_log: Option<PathBuf>,
    #[arg(long, default_value_t = 1600)]
    pub iters: u64,
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hard cap on every search, in milliseconds.
    #[arg(long, default_value_t = 20_000)]
    pub max_millis: u64,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Mine(_) => "mine",
            Command::Tournament(_) => "tournament",
            Command::Sweep(_) => "sweep",
            Command::Recommend(_) => "recommend",
            Command::Serve(_) => "serve",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => match err.downcast_ref::<commands::Usage>() {
            Some(usage) => {
                let name = cli.command.name();
                let mut sub = Cli::command()
                    .find_subcommand(name)
                    .cloned()
                    .expect("subcommand exists")
                    .bin_name(format!("herodraft {name}"));
                sub.error(ErrorKind::ArgumentConflict, &usage.0).exit()
            }
            None => {
                eprintln!("error: {err:#}");
                ExitCode::from(1)
            }
        },
    }
}
