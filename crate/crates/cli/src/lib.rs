//! `qarena` command line: training runs, evaluations, tournaments, state
//! counts, snapshot inspection and the HTTP play service.
//!
//! Exit codes: 0 on success (a run that does not converge is still a
//! success), 2 for invalid input or unreadable artifacts, 3 when a resource
//! cap stops the command early.

pub mod commands;
pub mod config;
pub mod server;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::ConfigFile;

pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const DEFAULT_SEED: u64 = 42;
pub const OUT_ENV: &str = "QARENA_OUT";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl fmt::Display) -> Self {
        CliError { code: EXIT_INVALID, message: message.to_string() }
    }

    pub fn cap(message: impl fmt::Display) -> Self {
        CliError { code: EXIT_CAP, message: message.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "qarena", version, about = "Q-learning agents, minimax opponents and tournaments for board games")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Seed for every random stream, or `random` to draw one.
    #[arg(long, global = true, value_parser = parse_seed)]
    pub seed: Option<SeedArg>,
    /// Output directory for this experiment. Falls back to the config
    /// file, then $QARENA_OUT.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML experiment description; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedArg {
    Fixed(u64),
    Random,
}

fn parse_seed(s: &str) -> Result<SeedArg, String> {
    if s.eq_ignore_ascii_case("random") {
        return Ok(SeedArg::Random);
    }
    s.parse().map(SeedArg::Fixed).map_err(|_| format!("seed must be an integer or `random`, got `{s}`"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a Q-table against a teacher.
    Train(commands::TrainArgs),
    /// Play a fixed number of games between two agents.
    Evaluate(commands::EvaluateArgs),
    /// Ordered round-robin with an automatic trial count.
    Tournament(commands::TournamentArgs),
    /// Count reachable states.
    Enumerate(commands::EnumerateArgs),
    /// Inspect snapshots and percent-trained agents.
    Snapshot(commands::SnapshotArgs),
    /// Serve the HTTP play API.
    Serve(commands::ServeArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Tournament(_) => "tournament",
            Command::Enumerate(_) => "enumerate",
            Command::Snapshot(_) => "snapshot",
            Command::Serve(_) => "serve",
        }
    }
}

/// Settings shared by every command after merging flags, config file and
/// environment.
#[derive(Debug, Clone)]
pub struct Context {
    pub command: &'static str,
    /// Seed given on the command line or in the config file, if any.
    pub seed: Option<u64>,
    out: Option<PathBuf>,
    pub file: ConfigFile,
}

impl Context {
    pub fn new(command: &'static str, global: &GlobalArgs) -> CliResult<Context> {
        let file = match &global.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let seed = match global.seed {
            Some(SeedArg::Fixed(s)) => Some(s),
            Some(SeedArg::Random) => Some(rand::random()),
            None => file.seed,
        };
        let out = global
            .out
            .clone()
            .or_else(|| file.out.clone())
            .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        Ok(Context { command, seed, out, file })
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// The experiment directory: the configured one, or
    /// `runs/<command>-<label>-seed<seed>`.
    pub fn out_dir(&self, label: &str, seed: u64) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(format!("{}-{label}-seed{seed}", self.command)))
    }
}

/// Writes `value` as pretty JSON to `dir/name`, creating `dir`.
pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> CliResult<PathBuf> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::invalid)?;
    write_file(dir, name, &(text + "\n"))
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::invalid(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    Ok(path)
}

pub fn run(cli: Cli) -> CliResult {
    let ctx = Context::new(cli.command.name(), &cli.global)?;
    match cli.command {
        Command::Train(a) => commands::train(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::Tournament(a) => commands::tournament(&ctx, a),
        Command::Enumerate(a) => commands::enumerate(&ctx, a),
        Command::Snapshot(a) => commands::snapshot(&ctx, a),
        Command::Serve(a) => server::serve(&ctx, a),
    }
}
