//! Live human-versus-agent matches.
//!
//! The store owns every session behind its own lock, so calls on different
//! sessions never wait on each other. Agent replies are computed inside the
//! request. Sessions idle for longer than the eviction period are dropped on
//! the next access to the store.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::agents::{default_depth, Agent, AgentSpec};
use crate::game::{Action, GameId, GameState, Outcome, Phase, Player};
use crate::seed::derive_seed;
use crate::snapshot;
use crate::trainer::MANIFEST_FILE;

pub const API_VERSION: u32 = 1;
pub const IDLE_EVICTION: Duration = Duration::from_secs(24 * 60 * 60);

/// Failure of a play-service call, grouped by HTTP status class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayError {
    #[serde(skip)]
    pub status: u16,
    pub error: &'static str,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub legal_actions: Option<Vec<String>>,
}

impl PlayError {
    fn new(status: u16, error: &'static str, detail: impl Into<String>) -> Self {
        PlayError { status, error, detail: detail.into(), legal_actions: None }
    }

    pub fn bad_request(error: &'static str, detail: impl Into<String>) -> Self {
        PlayError::new(400, error, detail)
    }

    pub fn not_found(error: &'static str, detail: impl Into<String>) -> Self {
        PlayError::new(404, error, detail)
    }

    fn conflict(error: &'static str, detail: impl Into<String>) -> Self {
        PlayError::new(409, error, detail)
    }
}

impl std::fmt::Display for PlayError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({}): {}", self.error, self.status, self.detail)
    }
}

impl std::error::Error for PlayError {}

/// One selectable opponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentEntry {
    /// Value to pass as `agent` when creating a match.
    pub id: String,
    pub label: String,
    /// Game the agent is tied to; built-ins play every game.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<GameId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub percent: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episode: Option<u64>,
}

/// Agents offered by the service, fixed once built.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Catalog {
    pub agents: Vec<AgentEntry>,
    pub warnings: Vec<String>,
}

impl Catalog {
    pub fn builtins() -> Catalog {
        let entry = |id: &str, label: &str| AgentEntry {
            id: id.to_string(),
            label: label.to_string(),
            game: None,
            percent: None,
            episode: None,
        };
        Catalog {
            agents: vec![
                entry("random", "Random"),
                entry("minmax-det", "Min-Max (deterministic)"),
                entry("minmax-nd", "Min-Max (non-deterministic)"),
            ],
            warnings: Vec::new(),
        }
    }

    /// Built-ins plus every converged run found in `dir` or its immediate
    /// subdirectories, offered as `Q-<letter>-10` to `Q-<letter>-100`, plus
    /// loose `.qsnap` files in `dir` under their file stem. Runs or
    /// snapshots that cannot be read are skipped with a warning.
    pub fn scan(dir: &Path) -> Result<Catalog, PlayError> {
        let bad_dir = |detail: String| PlayError::bad_request("bad_snapshot_dir", detail);
        if !dir.is_dir() {
            return Err(bad_dir(format!("{} is not a directory", dir.display())));
        }
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| bad_dir(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        let mut cat = Catalog::builtins();
        let mut found = Vec::new();
        let run_dirs = std::iter::once(dir.to_path_buf()).chain(entries.iter().filter(|p| p.is_dir()).cloned());
        for run in run_dirs.filter(|d| d.join(MANIFEST_FILE).is_file()) {
            match snapshot::percent_ladder(&run) {
                Ok(ladder) if ladder.is_empty() => {
                    cat.warnings.push(format!("skipped {}: run has no convergence-FS episode", run.display()))
                }
                Ok(ladder) => {
                    for (pct, episode, path) in ladder {
                        match snapshot::load_snapshot(&path) {
                            Ok(q) => found.push((
                                AgentEntry {
                                    id: AgentSpec::QPercent { run_dir: run.clone(), percent: f64::from(pct) }
                                        .to_string(),
                                    label: format!("Q-{}-{pct}", q.game().letter()),
                                    game: Some(q.game()),
                                    percent: Some(pct),
                                    episode: Some(episode),
                                },
                                run.clone(),
                            )),
                            Err(e) => cat.warnings.push(format!("skipped {}: {e}", path.display())),
                        }
                    }
                }
                Err(e) => cat.warnings.push(format!("skipped {}: {e}", run.display())),
            }
        }
        for path in entries.iter().filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "qsnap")) {
            match snapshot::load_snapshot(path) {
                Ok(q) => found.push((
                    AgentEntry {
                        id: AgentSpec::QSnapshot(path.clone()).to_string(),
                        label: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                        game: Some(q.game()),
                        percent: None,
                        episode: Some(q.episodes_trained),
                    },
                    dir.to_path_buf(),
                )),
                Err(e) => cat.warnings.push(format!("skipped {}: {e}", path.display())),
            }
        }
        // Two runs of the same game would both offer `Q-T-50`; name the run.
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (e, _) in &found {
            *seen.entry(e.label.clone()).or_default() += 1;
        }
        for (mut e, run) in found {
            if seen[&e.label] > 1 {
                let name = run.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                e.label = format!("{} [{name}]", e.label);
            }
            cat.agents.push(e);
        }
        for w in &cat.warnings {
            warn!("{w}");
        }
        Ok(cat)
    }

    /// Finds an entry by id or label.
    pub fn find(&self, key: &str) -> Option<&AgentEntry> {
        self.agents.iter().find(|e| e.id == key || e.label == key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mover {
    Human,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoveRecord {
    pub player: Player,
    pub by: Mover,
    pub action: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Status {
    InProgress,
    Finished { outcome: Outcome },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoardView {
    Tictactoe { cells: Vec<Option<Player>> },
    Morris { points: Vec<Option<Player>>, in_hand: [u8; 2], captured: [u8; 2] },
    Mancala { pits: Vec<u8> },
}

impl BoardView {
    fn of(state: &GameState) -> BoardView {
        match state {
            GameState::TicTacToe(t) => BoardView::Tictactoe { cells: t.cells().to_vec() },
            GameState::Morris(m) => BoardView::Morris {
                points: m.points().to_vec(),
                in_hand: [m.in_hand(Player::P1), m.in_hand(Player::P2)],
                captured: [m.captured(Player::P1), m.captured(Player::P2)],
            },
            GameState::Mancala(m) => BoardView::Mancala { pits: m.pits().to_vec() },
        }
    }
}

fn phase_name(state: &GameState) -> &'static str {
    match state {
        GameState::TicTacToe(_) => "play",
        GameState::Mancala(_) => "sowing",
        GameState::Morris(m) => match m.phase() {
            Phase::Placement => "placement",
            Phase::Movement => "movement",
            Phase::Removal(_) => "removal",
        },
    }
}

/// Snapshot of a session as returned by every call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub api_version: u32,
    pub id: String,
    pub game: GameId,
    pub human_seat: Player,
    pub agent: String,
    pub to_move: Player,
    pub phase: &'static str,
    pub board: BoardView,
    /// Moves the human may make now; empty when it is not their turn.
    pub legal_actions: Vec<String>,
    pub history: Vec<MoveRecord>,
    pub status: Status,
}

pub struct MatchSession {
    id: String,
    game: GameId,
    human: Player,
    agent_label: String,
    agent: Agent,
    start: GameState,
    state: GameState,
    history: Vec<(Player, Mover, Action)>,
    last_used: Instant,
}

impl MatchSession {
    pub fn state(&self) -> &GameState {
        &self.state
    }

    fn status(&self) -> Status {
        match self.state.outcome() {
            None => Status::InProgress,
            Some(outcome) => Status::Finished { outcome },
        }
    }

    fn human_legal(&self) -> Vec<Action> {
        if self.state.to_move() == self.human {
            self.state.legal_actions().unwrap_or_default()
        } else {
            Vec::new()
        }
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            api_version: API_VERSION,
            id: self.id.clone(),
            game: self.game,
            human_seat: self.human,
            agent: self.agent_label.clone(),
            to_move: self.state.to_move(),
            phase: phase_name(&self.state),
            board: BoardView::of(&self.state),
            legal_actions: self.human_legal().iter().map(Action::to_string).collect(),
            history: self
                .history
                .iter()
                .map(|&(player, by, a)| MoveRecord { player, by, action: a.to_string() })
                .collect(),
            status: self.status(),
        }
    }

    /// Lets the agent move until it is the human's turn or the game ends.
    fn agent_moves(&mut self) -> Result<(), PlayError> {
        while !self.state.is_terminal() && self.state.to_move() != self.human {
            let a = self.agent.select(&self.state).map_err(|e| PlayError::new(500, "agent_failed", e.to_string()))?;
            let player = self.state.to_move();
            self.state = self.state.apply(a).map_err(|e| PlayError::new(500, "agent_failed", e.to_string()))?;
            self.history.push((player, Mover::Agent, a));
        }
        Ok(())
    }

    /// Replays the move history from the start position. True when it
    /// reproduces the current state through legal moves only.
    pub fn audit(&self) -> bool {
        let mut s = self.start.clone();
        for &(player, _, a) in &self.history {
            if s.to_move() != player {
                return false;
            }
            match s.apply(a) {
                Ok(next) => s = next,
                Err(_) => return false,
            }
        }
        s == self.state
    }
}

/// All live sessions plus the agent catalog.
pub struct SessionStore {
    catalog: Catalog,
    sessions: Mutex<HashMap<String, Arc<Mutex<MatchSession>>>>,
    counter: AtomicU64,
    seed: u64,
    idle: Duration,
}

impl SessionStore {
    pub fn new(catalog: Catalog, seed: u64) -> Self {
        SessionStore {
            catalog,
            sessions: Mutex::new(HashMap::new()),
            counter: AtomicU64::new(0),
            seed,
            idle: IDLE_EVICTION,
        }
    }

    pub fn with_idle_timeout(mut self, idle: Duration) -> Self {
        self.idle = idle;
        self
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn evict_idle(&self, map: &mut HashMap<String, Arc<Mutex<MatchSession>>>) {
        let now = Instant::now();
        map.retain(|_, s| match s.try_lock() {
            Ok(s) => now.duration_since(s.last_used) < self.idle,
            // Busy means in use right now.
            Err(_) => true,
        });
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<MatchSession>>, PlayError> {
        let mut map = self.sessions.lock().unwrap();
        self.evict_idle(&mut map);
        map.get(id).cloned().ok_or_else(|| PlayError::not_found("unknown_session", format!("no match `{id}`")))
    }

    fn resolve_agent(&self, game: GameId, agent: &str, seed: u64) -> Result<(String, Agent), PlayError> {
        let entry = self.catalog.find(agent);
        if let Some(e) = entry.filter(|e| e.game.is_some_and(|g| g != game)) {
            return Err(PlayError::bad_request("agent_game_mismatch", format!("{} does not play {game}", e.label)));
        }
        let spec: AgentSpec = entry
            .map_or(agent, |e| e.id.as_str())
            .parse()
            .map_err(|e: crate::agents::AgentError| PlayError::not_found("unknown_agent", e.to_string()))?;
        let label = match &spec {
            AgentSpec::QTwin => return Err(PlayError::bad_request("unknown_agent", "q-twin is not playable")),
            // Snapshot agents only come from the scanned catalog.
            AgentSpec::QSnapshot(_) | AgentSpec::QPercent { .. } => match entry {
                Some(e) => e.label.clone(),
                None => return Err(PlayError::not_found("unknown_agent", format!("no catalog agent `{agent}`"))),
            },
            AgentSpec::MinMax { deterministic, depth } => {
                AgentSpec::MinMax { deterministic: *deterministic, depth: Some(depth.unwrap_or(default_depth(game))) }
                    .to_string()
            }
            AgentSpec::Random => spec.to_string(),
        };
        let agent = spec.resolve(game, seed).map_err(|e| PlayError::not_found("unknown_agent", e.to_string()))?;
        Ok((label, agent))
    }

    /// Starts a match. When the agent holds P1 its opening move is
    /// already on the board.
    pub fn create_match(&self, game: &str, seat: &str, agent: &str) -> Result<SessionView, PlayError> {
        let game: GameId =
            game.parse().map_err(|_| PlayError::bad_request("unknown_game", format!("unknown game `{game}`")))?;
        let human: Player = seat
            .parse()
            .map_err(|_| PlayError::bad_request("invalid_seat", format!("seat must be p1 or p2, got `{seat}`")))?;
        self.open(game, human, agent, GameState::initial(game))
    }

    fn open(&self, game: GameId, human: Player, agent: &str, start: GameState) -> Result<SessionView, PlayError> {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let (agent_label, agent) = self.resolve_agent(game, agent, derive_seed(self.seed, 2 * n + 1))?;
        let id = format!("{:016x}", derive_seed(self.seed, 2 * n));
        let mut session = MatchSession {
            id: id.clone(),
            game,
            human,
            agent_label,
            agent,
            state: start.clone(),
            start,
            history: Vec::new(),
            last_used: Instant::now(),
        };
        session.agent_moves()?;
        let view = session.view();
        let mut map = self.sessions.lock().unwrap();
        self.evict_idle(&mut map);
        map.insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn get_state(&self, id: &str) -> Result<SessionView, PlayError> {
        let s = self.session(id)?;
        let mut s = s.lock().unwrap();
        s.last_used = Instant::now();
        Ok(s.view())
    }

    /// Applies the human's move, then every agent move that follows it.
    pub fn post_move(&self, id: &str, action: &str) -> Result<SessionView, PlayError> {
        let s = self.session(id)?;
        let mut s = s.lock().unwrap();
        s.last_used = Instant::now();
        if s.state.is_terminal() {
            return Err(PlayError::conflict("game_over", "the match has finished"));
        }
        if s.state.to_move() != s.human {
            return Err(PlayError::conflict("not_your_turn", "waiting for the agent"));
        }
        let legal = s.human_legal();
        let illegal = |detail: String| PlayError {
            legal_actions: Some(legal.iter().map(Action::to_string).collect()),
            ..PlayError::new(422, "illegal_action", detail)
        };
        let a = Action::parse(s.game, action).map_err(|e| illegal(e.to_string()))?;
        if !legal.contains(&a) {
            return Err(illegal(format!("`{a}` is not legal here")));
        }
        let human = s.human;
        s.state = s.state.apply(a).map_err(|e| illegal(e.to_string()))?;
        s.history.push((human, Mover::Human, a));
        s.agent_moves()?;
        Ok(s.view())
    }

    /// Replay audit of one session.
    pub fn audit(&self, id: &str) -> Result<bool, PlayError> {
        Ok(self.session(id)?.lock().unwrap().audit())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GameInfo {
    pub id: GameId,
    pub name: &'static str,
    pub letter: char,
    pub default_depth: u32,
}

pub fn games() -> Vec<GameInfo> {
    GameId::ALL
        .into_iter()
        .map(|g| GameInfo { id: g, name: g.name(), letter: g.letter(), default_depth: default_depth(g) })
        .collect()
}
