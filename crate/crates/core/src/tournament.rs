//! Match play, stability calibration and the ordered round-robin.
//!
//! Every ordered pair of entrants plays `n_trials` games with the row agent
//! as P1, so `(a, b)` and `(b, a)` are separate cells and each agent also
//! meets itself. Cells read `W:D:L` from the P1 side.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Agent, AgentError, AgentSpec};
use crate::game::{Action, GameError, GameId, GameState, Outcome, Player};
use crate::seed::derive_seed;

#[derive(Debug, Error)]
pub enum TournamentError {
    #[error("empty roster")]
    EmptyRoster,
    #[error("duplicate agent name `{0}`")]
    DuplicateName(String),
    #[error("no pairings given")]
    NoPairings,
    #[error("n_trials must be at least 1")]
    ZeroTrials,
    #[error("{name}: {source}")]
    Agent { name: String, source: AgentError },
    #[error(transparent)]
    Game(#[from] GameError),
}

impl TournamentError {
    pub fn code(&self) -> &'static str {
        match self {
            TournamentError::EmptyRoster => "empty_roster",
            TournamentError::DuplicateName(_) => "duplicate_name",
            TournamentError::NoPairings => "no_pairings",
            TournamentError::ZeroTrials => "zero_trials",
            TournamentError::Agent { .. } => "agent",
            TournamentError::Game(_) => "game",
        }
    }
}

/// Plays one game to the end and returns the outcome and the moves.
pub fn play_game(start: &GameState, p1: &mut Agent, p2: &mut Agent) -> Result<(Outcome, Vec<Action>), GameError> {
    let mut state = start.clone();
    let mut moves = Vec::new();
    while !state.is_terminal() {
        let action = match state.to_move() {
            Player::P1 => p1.select(&state)?,
            Player::P2 => p2.select(&state)?,
        };
        state = state.apply(action)?;
        moves.push(action);
    }
    Ok((state.outcome().expect("terminal"), moves))
}

/// W:D:L counts from the P1 side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub p1_wins: u64,
    pub draws: u64,
    pub p1_losses: u64,
}

impl Tally {
    pub fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Win(Player::P1) => self.p1_wins += 1,
            Outcome::Win(Player::P2) => self.p1_losses += 1,
            Outcome::Draw => self.draws += 1,
        }
    }

    pub fn games(&self) -> u64 {
        self.p1_wins + self.draws + self.p1_losses
    }
}

/// `n` games with `p1` always moving first.
pub fn play_match(start: &GameState, p1: &mut Agent, p2: &mut Agent, n: u64) -> Result<Tally, GameError> {
    let mut tally = Tally::default();
    for _ in 0..n {
        tally.add(play_game(start, p1, p2)?.0);
    }
    Ok(tally)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchRecord {
    pub p1: String,
    pub p2: String,
    pub n_games: u64,
    pub p1_wins: u64,
    pub draws: u64,
    pub p1_losses: u64,
}

impl MatchRecord {
    pub fn new(p1: impl Into<String>, p2: impl Into<String>, t: Tally) -> Self {
        MatchRecord {
            p1: p1.into(),
            p2: p2.into(),
            n_games: t.games(),
            p1_wins: t.p1_wins,
            draws: t.draws,
            p1_losses: t.p1_losses,
        }
    }

    /// A bare record with placeholder names, handy for arithmetic.
    pub fn counts(p1_wins: u64, draws: u64, p1_losses: u64) -> Self {
        MatchRecord::new("", "", Tally { p1_wins, draws, p1_losses })
    }
}

impl fmt::Display for MatchRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.p1_wins, self.draws, self.p1_losses)
    }
}

/// Three points per win and one per draw, summed over an agent's P1 row.
pub fn points(row: &[MatchRecord]) -> u64 {
    row.iter().map(|r| 3 * r.p1_wins + r.draws).sum()
}

/// A named roster entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entrant {
    pub name: String,
    pub spec: AgentSpec,
}

impl Entrant {
    pub fn new(name: impl Into<String>, spec: AgentSpec) -> Self {
        Entrant { name: name.into(), spec }
    }

    fn resolve(&self, game: GameId) -> Result<Agent, TournamentError> {
        self.spec.resolve(game, 0).map_err(|source| TournamentError::Agent { name: self.name.clone(), source })
    }
}

fn check_roster(entrants: &[Entrant]) -> Result<(), TournamentError> {
    if entrants.is_empty() {
        return Err(TournamentError::EmptyRoster);
    }
    let mut seen = HashSet::new();
    for e in entrants {
        if !seen.insert(e.name.as_str()) {
            return Err(TournamentError::DuplicateName(e.name.clone()));
        }
    }
    Ok(())
}

fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TournamentTable {
    pub game: GameId,
    pub names: Vec<String>,
    /// `cells[i][j]`: agent `i` as P1 against agent `j` as P2.
    pub cells: Vec<Vec<MatchRecord>>,
    pub n_trials: u64,
}

impl TournamentTable {
    /// Points from agent `i`'s P1 row.
    pub fn points(&self, i: usize) -> u64 {
        points(&self.cells[i])
    }

    /// Points over both seats: the P1 row plus, from the P2 column, three
    /// per P1 loss and one per draw.
    pub fn combined_points(&self, i: usize) -> u64 {
        let as_p2: u64 = self.cells.iter().map(|row| 3 * row[i].p1_losses + row[i].draws).sum();
        self.points(i) + as_p2
    }

    /// Agent indices sorted by P1-row points, best first. Ties keep roster
    /// order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.names.len()).collect();
        idx.sort_by_key(|&i| std::cmp::Reverse(self.points(i)));
        idx
    }

    pub fn render_text(&self) -> String {
        let cell_w = self
            .cells
            .iter()
            .flatten()
            .map(|r| r.to_string().len())
            .chain(self.names.iter().map(String::len))
            .max()
            .unwrap_or(0)
            .max(5)
            + 2;
        let name_w = self.names.iter().map(String::len).max().unwrap_or(0).max(5) + 2;
        let mut out = String::new();
        let _ = write!(out, "{:<name_w$}", "P1\\P2");
        for n in &self.names {
            let _ = write!(out, "{n:>cell_w$}");
        }
        let _ = writeln!(out, "{:>8}{:>16}", "Points", "Points(P1+P2)");
        for (i, row) in self.cells.iter().enumerate() {
            let _ = write!(out, "{:<name_w$}", self.names[i]);
            for r in row {
                let _ = write!(out, "{:>cell_w$}", r.to_string());
            }
            let _ = writeln!(out, "{:>8}{:>16}", self.points(i), self.combined_points(i));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("p1,p2,n_games,p1_wins,draws,p1_losses\n");
        for r in self.cells.iter().flatten() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_field(&r.p1),
                csv_field(&r.p2),
                r.n_games,
                r.p1_wins,
                r.draws,
                r.p1_losses
            );
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Every ordered pair, self-pairs included, `n_trials` games each. Pairs
/// run in parallel on `jobs` threads; each pair's agents get streams
/// derived from `seed` and the pair index, so results do not depend on
/// `jobs`.
pub fn round_robin(
    game: GameId,
    entrants: &[Entrant],
    n_trials: u64,
    seed: u64,
    jobs: usize,
) -> Result<TournamentTable, TournamentError> {
    check_roster(entrants)?;
    if n_trials == 0 {
        return Err(TournamentError::ZeroTrials);
    }
    let agents = entrants.iter().map(|e| e.resolve(game)).collect::<Result<Vec<_>, _>>()?;
    let k = entrants.len();
    let start = GameState::initial(game);
    let flat: Vec<MatchRecord> = pool(jobs).install(|| {
        (0..k * k)
            .into_par_iter()
            .map(|cell| {
                let (i, j) = (cell / k, cell % k);
                let pair_seed = derive_seed(seed, cell as u64);
                let mut a = agents[i].fork(derive_seed(pair_seed, 0));
                let mut b = agents[j].fork(derive_seed(pair_seed, 1));
                let tally = play_match(&start, &mut a, &mut b, n_trials)?;
                Ok(MatchRecord::new(&entrants[i].name, &entrants[j].name, tally))
            })
            .collect::<Result<Vec<_>, GameError>>()
    })?;
    let cells = flat.chunks(k).map(<[MatchRecord]>::to_vec).collect();
    Ok(TournamentTable { game, names: entrants.iter().map(|e| e.name.clone()).collect(), cells, n_trials })
}

/// Parameters of the stability search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConfig {
    /// Minimum trial count, and one tenth of the per-pairing game cap.
    pub n1: u64,
    /// Games that must follow a batch with matching loss tallies.
    pub window: u64,
    /// Allowed difference in per-batch loss tally.
    pub tolerance: u64,
    pub batch: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig { n1: 100, window: 20, tolerance: 1, batch: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingStability {
    pub p1: String,
    pub p2: String,
    /// Game number at which results became stable; `None` if the pairing
    /// hit the game cap first.
    pub stable_at: Option<u64>,
    pub games_played: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub pairings: Vec<PairingStability>,
    pub n_trials: u64,
}

impl StabilityReport {
    pub fn unstable(&self) -> impl Iterator<Item = &PairingStability> {
        self.pairings.iter().filter(|p| p.stable_at.is_none())
    }
}

/// First batch whose P1 loss tally is matched within tolerance by each of
/// the following `window / batch` batches. Returns the batch index.
fn first_stable_batch(tallies: &[u64], follow: usize, tolerance: u64) -> Option<usize> {
    (0..tallies.len().saturating_sub(follow))
        .find(|&i| tallies[i + 1..=i + follow].iter().all(|&t| t.abs_diff(tallies[i]) <= tolerance))
}

fn measure_pairing(
    start: &GameState,
    p1: &mut Agent,
    p2: &mut Agent,
    cfg: &StabilityConfig,
) -> Result<(Option<u64>, u64), GameError> {
    let batch = cfg.batch.max(1);
    let follow = cfg.window.div_ceil(batch).max(1) as usize;
    let cap = 10 * cfg.n1;
    let mut tallies = Vec::new();
    let mut played = 0;
    while played + batch <= cap.max(batch) {
        let t = play_match(start, p1, p2, batch)?;
        played += batch;
        tallies.push(t.p1_losses);
        if tallies.len() > follow {
            // Only the newest candidate can have just become stable.
            let i = tallies.len() - 1 - follow;
            if first_stable_batch(&tallies[i..], follow, cfg.tolerance) == Some(0) {
                return Ok((Some(i as u64 * batch + 1), played));
            }
        }
    }
    Ok((None, played))
}

/// Plays each pairing until its per-batch loss tally settles and picks the
/// trial count for the tournament as the largest settling point, never
/// below `n1`. Pairings that never settle within `10 * n1` games are
/// reported and left out of the maximum.
pub fn stability_trials(
    game: GameId,
    pairings: &[(Entrant, Entrant)],
    cfg: StabilityConfig,
    seed: u64,
    jobs: usize,
) -> Result<StabilityReport, TournamentError> {
    if pairings.is_empty() {
        return Err(TournamentError::NoPairings);
    }
    let resolved = pairings
        .iter()
        .map(|(a, b)| Ok((a.resolve(game)?, b.resolve(game)?)))
        .collect::<Result<Vec<_>, TournamentError>>()?;
    let start = GameState::initial(game);
    let results: Vec<(Option<u64>, u64)> = pool(jobs).install(|| {
        resolved
            .par_iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let s = derive_seed(seed, i as u64);
                measure_pairing(&start, &mut a.fork(derive_seed(s, 0)), &mut b.fork(derive_seed(s, 1)), &cfg)
            })
            .collect::<Result<Vec<_>, GameError>>()
    })?;
    let mut report = Vec::new();
    for ((a, b), (stable_at, games_played)) in pairings.iter().zip(results) {
        if stable_at.is_none() {
            warn!("{} vs {} did not stabilize within {games_played} games", a.name, b.name);
        }
        report.push(PairingStability { p1: a.name.clone(), p2: b.name.clone(), stable_at, games_played });
    }
    let n_trials = report.iter().filter_map(|p| p.stable_at).chain([cfg.n1]).max().unwrap_or(cfg.n1);
    Ok(StabilityReport { pairings: report, n_trials })
}

/// All ordered pairs of the roster, self-pairs included.
pub fn all_pairings(entrants: &[Entrant]) -> Vec<(Entrant, Entrant)> {
    entrants.iter().flat_map(|a| entrants.iter().map(move |b| (a.clone(), b.clone()))).collect()
}
