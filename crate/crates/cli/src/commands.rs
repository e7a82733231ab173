use std::path::PathBuf;

use clap::{Args, Subcommand};
use qarena_core::game::enumerate_reachable_to_depth;
use qarena_core::snapshot::{self, decode};
use qarena_core::tournament::{self, all_pairings, round_robin, stability_trials};
use qarena_core::trainer::{self, RunManifest, MANIFEST_FILE};
use qarena_core::{AgentSpec, Entrant, GameError, GameId, StabilityConfig, TrainConfig};
use serde_json::json;

use crate::{write_file, write_json, CliError, CliResult, Context};

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub game: Option<GameId>,
    /// Teacher agent, e.g. `minmax-det:depth=9`, `random`, `q-twin`.
    #[arg(long)]
    pub teacher: Option<AgentSpec>,
    /// Agent the learner is scored against (default: deterministic minimax).
    #[arg(long)]
    pub eval_opponent: Option<AgentSpec>,
    #[arg(long)]
    pub max_episodes: Option<u64>,
    #[arg(long)]
    pub eval_every: Option<u64>,
    #[arg(long)]
    pub eval_games: Option<u64>,
    #[arg(long)]
    pub snapshot_every: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Decay ε linearly to 0.01 over the run.
    #[arg(long)]
    pub epsilon_decay: bool,
    /// Count draws as wins when rewarding the learner.
    #[arg(long)]
    pub draw_as_win: bool,
}

impl TrainArgs {
    fn config(self, ctx: &Context) -> CliResult<TrainConfig> {
        let from_file = ctx.file.train_config().map_err(CliError::invalid)?;
        let file_game = from_file.as_ref().is_some_and(|(_, has)| *has);
        let mut cfg = from_file.map(|(c, _)| c).unwrap_or_default();
        match self.game {
            Some(g) => cfg.game = g,
            None if file_game => {}
            None => return Err(CliError::invalid("missing --game")),
        }
        if let Some(t) = self.teacher {
            cfg.teacher = t;
        }
        if self.eval_opponent.is_some() {
            cfg.eval_opponent = self.eval_opponent;
        }
        macro_rules! set {
            ($($field:ident),*) => {$(if let Some(v) = self.$field { cfg.$field = v; })*};
        }
        set!(max_episodes, eval_every, eval_games, alpha, gamma, epsilon);
        if self.snapshot_every.is_some() {
            cfg.snapshot_every = self.snapshot_every;
        }
        cfg.epsilon_decay |= self.epsilon_decay;
        if self.draw_as_win {
            cfg.rewards = qarena_core::RewardSpec::draw_as_win();
        }
        if let Some(seed) = ctx.seed {
            cfg.seed = seed;
        }
        cfg.validate().map_err(CliError::invalid)?;
        Ok(cfg)
    }
}

pub fn train(ctx: &Context, args: TrainArgs) -> CliResult {
    let cfg = args.config(ctx)?;
    let dir = ctx.out_dir(cfg.game.name(), cfg.seed);
    let run = trainer::train(&cfg, Some(&dir)).map_err(CliError::invalid)?;
    let opt = |v: Option<u64>| v.map_or("none".to_string(), |e| e.to_string());
    println!("episodes_run: {}", run.episodes_run);
    println!("convergence_st: {}", opt(run.convergence_st));
    println!("convergence_fs: {}", opt(run.convergence_fs));
    println!("converged: {}", run.converged());
    println!("manifest: {}", dir.join(MANIFEST_FILE).display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub game: GameId,
    /// Agent playing P1 in every game.
    #[arg(long)]
    pub p1: AgentSpec,
    /// Agent playing P2 in every game.
    #[arg(long)]
    pub p2: AgentSpec,
    #[arg(long, default_value_t = 100)]
    pub games: u64,
}

pub fn evaluate(ctx: &Context, args: EvaluateArgs) -> CliResult {
    let seed = ctx.seed_or_default();
    let record = trainer::evaluate(&args.p1, &args.p2, args.game, args.games, seed).map_err(CliError::invalid)?;
    let dir = ctx.out_dir(args.game.name(), seed);
    let path = write_json(&dir, "evaluate.json", &json!({ "game": args.game, "seed": seed, "record": record }))?;
    println!("{} vs {}: {record} (W:D:L for P1)", record.p1, record.p2);
    println!("result: {}", path.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct TournamentArgs {
    #[arg(long)]
    pub game: Option<GameId>,
    /// Roster entry as NAME=SPEC; repeat for each agent.
    #[arg(long = "agent", value_parser = parse_entrant)]
    pub agents: Vec<Entrant>,
    /// Games per ordered pairing. Skips the stability search.
    #[arg(long)]
    pub n_trials: Option<u64>,
    /// Worker threads for pairings.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Minimum trial count for the stability search.
    #[arg(long)]
    pub n1: Option<u64>,
}

fn parse_entrant(s: &str) -> Result<Entrant, String> {
    let (name, spec) = s.split_once('=').ok_or_else(|| format!("expected NAME=SPEC, got `{s}`"))?;
    if name.is_empty() {
        return Err(format!("empty agent name in `{s}`"));
    }
    Ok(Entrant::new(name, spec.parse().map_err(|e: qarena_core::AgentError| e.to_string())?))
}

pub fn tournament(ctx: &Context, args: TournamentArgs) -> CliResult {
    let section = ctx.file.tournament.clone().unwrap_or_default();
    let game = args.game.or(section.game).ok_or_else(|| CliError::invalid("missing --game"))?;
    let roster = if args.agents.is_empty() { section.roster } else { args.agents };
    let jobs = args.jobs.or(section.jobs).unwrap_or(1);
    let defaults = StabilityConfig::default();
    let stability_cfg = StabilityConfig {
        n1: args.n1.or(section.n1).unwrap_or(defaults.n1),
        window: section.window.unwrap_or(defaults.window),
        tolerance: section.tolerance.unwrap_or(defaults.tolerance),
        batch: section.batch.unwrap_or(defaults.batch),
    };
    let seed = ctx.seed_or_default();
    let dir = ctx.out_dir(game.name(), seed);
    let fail = |e: tournament::TournamentError| CliError::invalid(format!("{}: {e}", e.code()));

    let (n_trials, stability) = match args.n_trials.or(section.n_trials) {
        Some(n) => (n, None),
        None => {
            let report = stability_trials(game, &all_pairings(&roster), stability_cfg, seed, jobs).map_err(fail)?;
            for p in report.unstable() {
                eprintln!("warning: {} vs {} never stabilized in {} games", p.p1, p.p2, p.games_played);
            }
            (report.n_trials, Some(report))
        }
    };
    // The round-robin gets its own stream so a fixed n_trials reproduces
    // the same table with or without the search.
    let table = round_robin(game, &roster, n_trials, qarena_core::seed::derive_seed(seed, 1), jobs).map_err(fail)?;

    let text = table.render_text();
    write_file(&dir, "table.txt", &text)?;
    write_file(&dir, "table.csv", &table.to_csv())?;
    let ranking: Vec<_> = table
        .ranking()
        .into_iter()
        .map(|i| json!({ "name": table.names[i], "points": table.points(i), "combined_points": table.combined_points(i) }))
        .collect();
    let path = write_json(
        &dir,
        "tournament.json",
        &json!({ "game": game, "seed": seed, "n_trials": n_trials, "roster": roster, "ranking": ranking, "stability": stability, "table": table }),
    )?;
    print!("{text}");
    println!("n_trials: {n_trials}");
    println!("result: {}", path.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub game: GameId,
    /// Stop with exit code 3 once this many distinct states are found.
    #[arg(long, default_value_t = 10_000_000)]
    pub cap: usize,
    /// Only count states within this many plies of the start.
    #[arg(long)]
    pub depth: Option<u32>,
}

pub fn enumerate(ctx: &Context, args: EnumerateArgs) -> CliResult {
    let dir = ctx.out_dir(args.game.name(), ctx.seed_or_default());
    let result = enumerate_reachable_to_depth(args.game, args.cap, args.depth);
    let (status, count) = match &result {
        Ok(n) => ("complete", *n),
        Err(GameError::CapExceeded { found }) => ("cap_exceeded", *found),
        Err(e) => return Err(CliError::invalid(e)),
    };
    write_json(
        &dir,
        "enumerate.json",
        &json!({ "game": args.game, "cap": args.cap, "depth": args.depth, "status": status, "states": count }),
    )?;
    println!("{count}");
    match result {
        Ok(_) => Ok(()),
        Err(_) => Err(CliError::cap(format!("cap of {} exceeded; {count} states found so far", args.cap))),
    }
}

#[derive(Debug, Args)]
pub struct SnapshotArgs {
    #[command(subcommand)]
    pub action: SnapshotAction,
}

#[derive(Debug, Subcommand)]
pub enum SnapshotAction {
    /// Print a snapshot's header.
    Info { path: PathBuf },
    /// Resolve the snapshot for a percent of a run's convergence episode.
    Percent {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        percent: f64,
    },
    /// List the 10% to 100% snapshots of a converged run.
    Ladder {
        #[arg(long)]
        run: PathBuf,
    },
}

pub fn snapshot(ctx: &Context, args: SnapshotArgs) -> CliResult {
    let fail = |e: qarena_core::SnapshotError| CliError::invalid(format!("{}: {e}", e.code()));
    let seed = ctx.seed_or_default();
    let (label, result) = match args.action {
        SnapshotAction::Info { path } => {
            let bytes = std::fs::read(&path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
            let q = decode(&bytes, &path).map_err(fail)?;
            println!("game: {}", q.game().name());
            println!("alpha: {}  gamma: {}  epsilon: {}", q.alpha, q.gamma, q.epsilon);
            println!("episodes: {}", q.episodes_trained);
            println!("states: {}", q.len());
            let info = json!({
                "path": path, "game": q.game(), "alpha": q.alpha, "gamma": q.gamma, "epsilon": q.epsilon,
                "episodes": q.episodes_trained, "states": q.len(), "bytes": bytes.len(),
            });
            ("info", info)
        }
        SnapshotAction::Percent { run, percent } => {
            let path = snapshot::percent_snapshot_in_dir(&run, percent).map_err(fail)?;
            println!("{}", path.display());
            ("percent", json!({ "run": run, "percent": percent, "path": path }))
        }
        SnapshotAction::Ladder { run } => {
            let manifest = RunManifest::read(&run).map_err(fail)?;
            let game = manifest.config.game;
            let ladder = snapshot::percent_ladder(&run).map_err(fail)?;
            if ladder.is_empty() {
                return Err(fail(qarena_core::SnapshotError::RunNotConverged));
            }
            let rows: Vec<_> = ladder
                .iter()
                .map(|(pct, ep, path)| {
                    let label = format!("Q-{}-{pct}", game.letter());
                    println!("{label}\t{ep}\t{}", path.display());
                    json!({ "label": label, "percent": pct, "episode": ep, "path": path })
                })
                .collect();
            ("ladder", json!({ "run": run, "convergence_fs": manifest.convergence_fs, "snapshots": rows }))
        }
    };
    write_json(&ctx.out_dir(label, seed), "snapshot.json", &result)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory of training runs to offer as opponents.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entrant_flag() {
        let e = parse_entrant("Q-100=q:runs/a/ep.qsnap").unwrap();
        assert_eq!(e.name, "Q-100");
        assert_eq!(e.spec, AgentSpec::QSnapshot("runs/a/ep.qsnap".into()));
        assert!(parse_entrant("random").is_err());
        assert!(parse_entrant("=random").is_err());
        assert!(parse_entrant("x=chess").is_err());
    }
}
