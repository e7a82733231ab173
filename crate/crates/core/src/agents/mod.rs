//! Playable policies: uniform random, deterministic and non-deterministic
//! minimax, and greedy play from a learned Q-table.

mod minimax;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Action, GameError, GameId, GameState};
use crate::snapshot::{self, SnapshotError};
use crate::trainer::QTable;

pub use minimax::{minimax_value, Heuristic, MinMax};

/// Minimax depth used when a spec does not name one: exhaustive for
/// Tic-Tac-Toe, six plies for the larger games.
pub fn default_depth(game: GameId) -> u32 {
    match game {
        GameId::TicTacToe => 9,
        GameId::NineMensMorris | GameId::Mancala => 6,
    }
}

/// Textual agent description, as accepted on the command line and by the
/// HTTP API: `random`, `minmax-det:depth=9`, `minmax-nd:depth=6`,
/// `q:<snapshot-path>`, `q-pct:<run-dir>:<percent>`. `q-twin` is only
/// meaningful as a training teacher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AgentSpec {
    Random,
    MinMax { deterministic: bool, depth: Option<u32> },
    QSnapshot(PathBuf),
    QPercent { run_dir: PathBuf, percent: f64 },
    QTwin,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("bad agent spec `{0}`")]
    Parse(String),
    #[error("minimax depth must be at least 1")]
    ZeroDepth,
    #[error("q-twin can only be used as a training teacher")]
    TwinNotPlayable,
    #[error("agent plays {found} but the match is {expected}")]
    GameMismatch { expected: GameId, found: GameId },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

impl AgentSpec {
    pub fn minmax_det(depth: u32) -> Self {
        AgentSpec::MinMax { deterministic: true, depth: Some(depth) }
    }

    pub fn minmax_nd(depth: u32) -> Self {
        AgentSpec::MinMax { deterministic: false, depth: Some(depth) }
    }

    /// Builds a playable agent for `game`, loading snapshots from disk.
    pub fn resolve(&self, game: GameId, seed: u64) -> Result<Agent, AgentError> {
        let policy = match self {
            AgentSpec::Random => Policy::Random,
            AgentSpec::MinMax { deterministic, depth } => {
                let depth = depth.unwrap_or_else(|| default_depth(game));
                if depth == 0 {
                    return Err(AgentError::ZeroDepth);
                }
                Policy::MinMax(MinMax::new(depth, *deterministic, Heuristic::default()))
            }
            AgentSpec::QSnapshot(path) => Policy::Greedy(Arc::new(snapshot::load_snapshot(path)?)),
            AgentSpec::QPercent { run_dir, percent } => {
                let path = snapshot::percent_snapshot_in_dir(run_dir, *percent)?;
                Policy::Greedy(Arc::new(snapshot::load_snapshot(&path)?))
            }
            AgentSpec::QTwin => return Err(AgentError::TwinNotPlayable),
        };
        if let Policy::Greedy(q) = &policy {
            if q.game() != game {
                return Err(AgentError::GameMismatch { expected: game, found: q.game() });
            }
        }
        Ok(Agent::new(policy, seed))
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentSpec::Random => f.write_str("random"),
            AgentSpec::MinMax { deterministic, depth } => {
                f.write_str(if *deterministic { "minmax-det" } else { "minmax-nd" })?;
                if let Some(d) = depth {
                    write!(f, ":depth={d}")?;
                }
                Ok(())
            }
            AgentSpec::QSnapshot(p) => write!(f, "q:{}", p.display()),
            AgentSpec::QPercent { run_dir, percent } => {
                write!(f, "q-pct:{}:{}", run_dir.display(), percent)
            }
            AgentSpec::QTwin => f.write_str("q-twin"),
        }
    }
}

impl From<AgentSpec> for String {
    fn from(spec: AgentSpec) -> String {
        spec.to_string()
    }
}

impl TryFrom<String> for AgentSpec {
    type Error = AgentError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl FromStr for AgentSpec {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AgentError::Parse(s.to_string());
        let s = s.trim();
        if s == "random" {
            return Ok(AgentSpec::Random);
        }
        if s == "q-twin" {
            return Ok(AgentSpec::QTwin);
        }
        if let Some(rest) = s.strip_prefix("q-pct:") {
            let (dir, pct) = rest.rsplit_once(':').ok_or_else(bad)?;
            let percent: f64 = pct.parse().map_err(|_| bad())?;
            if dir.is_empty() || !(percent > 0.0 && percent <= 100.0) {
                return Err(bad());
            }
            return Ok(AgentSpec::QPercent { run_dir: dir.into(), percent });
        }
        if let Some(path) = s.strip_prefix("q:") {
            if path.is_empty() {
                return Err(bad());
            }
            return Ok(AgentSpec::QSnapshot(path.into()));
        }
        let (kind, opts) = s.split_once(':').unwrap_or((s, ""));
        let deterministic = match kind {
            "minmax-det" => true,
            "minmax-nd" => false,
            _ => return Err(bad()),
        };
        let mut depth = None;
        for opt in opts.split(',').filter(|o| !o.is_empty()) {
            match opt.split_once('=') {
                Some(("depth", d)) => {
                    let d: u32 = d.parse().map_err(|_| bad())?;
                    if d == 0 {
                        return Err(AgentError::ZeroDepth);
                    }
                    depth = Some(d);
                }
                _ => return Err(bad()),
            }
        }
        Ok(AgentSpec::MinMax { deterministic, depth })
    }
}

#[derive(Debug, Clone)]
pub enum Policy {
    Random,
    MinMax(MinMax),
    Greedy(Arc<QTable>),
}

/// A policy plus its private random stream. Not meant to be shared across
/// threads; [`Agent::fork`] gives an independent copy with a new seed.
#[derive(Debug, Clone)]
pub struct Agent {
    policy: Policy,
    rng: ChaCha8Rng,
}

impl Agent {
    pub fn new(policy: Policy, seed: u64) -> Self {
        Agent { policy, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn random(seed: u64) -> Self {
        Agent::new(Policy::Random, seed)
    }

    pub fn greedy(table: Arc<QTable>, seed: u64) -> Self {
        Agent::new(Policy::Greedy(table), seed)
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    /// Same policy, fresh random stream.
    pub fn fork(&self, seed: u64) -> Agent {
        Agent::new(self.policy.clone(), seed)
    }

    /// True when repeated calls on the same state always agree.
    pub fn is_deterministic(&self) -> bool {
        matches!(&self.policy, Policy::MinMax(m) if m.deterministic())
    }

    pub fn select(&mut self, state: &GameState) -> Result<Action, GameError> {
        match &mut self.policy {
            Policy::Random => select_random(state, &mut self.rng),
            Policy::MinMax(m) => m.select(state, &mut self.rng),
            Policy::Greedy(q) => select_q(state, q, &mut self.rng),
        }
    }
}

/// Uniform over the legal actions.
pub fn select_random<R: Rng + ?Sized>(state: &GameState, rng: &mut R) -> Result<Action, GameError> {
    let actions = state.legal_actions()?;
    Ok(*actions.choose(rng).expect("non-terminal states have actions"))
}

/// Greedy over Q, unseen pairs valued 0, ties broken uniformly.
pub fn select_q<R: Rng + ?Sized>(state: &GameState, q: &QTable, rng: &mut R) -> Result<Action, GameError> {
    debug_assert_eq!(state.game(), q.game());
    let actions = state.legal_actions()?;
    let idx = greedy_index(q.values(&state.key()), actions.len(), rng);
    Ok(actions[idx])
}

pub(crate) fn greedy_index<R: Rng + ?Sized>(row: Option<&[f64]>, n: usize, rng: &mut R) -> usize {
    let Some(row) = row else {
        return rng.random_range(0..n);
    };
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..n).filter(|&i| row[i] == best).collect();
    *ties.choose(rng).expect("at least one maximum")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Player, TicTacToe};
    use rand::SeedableRng;

    fn ttt(board: &str) -> GameState {
        GameState::TicTacToe(TicTacToe::from_cells(board).unwrap())
    }

    #[test]
    fn spec_syntax_round_trips() {
        for text in [
            "random",
            "minmax-det:depth=9",
            "minmax-nd:depth=6",
            "minmax-det",
            "q:runs/a/snap.qsnap",
            "q-pct:runs/twin:50",
            "q-twin",
        ] {
            let spec: AgentSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        for bad in ["", "minmax", "minmax-det:depth=0", "minmax-det:width=3", "q:", "q-pct:dir:0", "q-pct:dir"] {
            assert!(bad.parse::<AgentSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn q_pct_allows_colons_in_path() {
        let spec: AgentSpec = "q-pct:C:/runs/x:12.5".parse().unwrap();
        assert_eq!(spec, AgentSpec::QPercent { run_dir: "C:/runs/x".into(), percent: 12.5 });
    }

    #[test]
    fn twin_is_not_playable() {
        assert!(matches!(AgentSpec::QTwin.resolve(GameId::TicTacToe, 1), Err(AgentError::TwinNotPlayable)));
    }

    #[test]
    fn random_is_reproducible_per_seed() {
        let s = GameState::initial(GameId::TicTacToe);
        let picks = |seed| {
            let mut a = Agent::random(seed);
            (0..20).map(|_| a.select(&s).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(picks(7), picks(7));
        assert_ne!(picks(7), picks(8));
    }

    #[test]
    fn forced_move_is_taken() {
        let s = ttt("XOXXOOOX.");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(select_random(&s, &mut rng).unwrap(), Action::Cell(8));
        }
    }

    #[test]
    fn random_is_uniform_on_empty_board() {
        // 9000 draws, each cell expected 1000 with sd ~31.6; allow +-100.
        let s = GameState::initial(GameId::TicTacToe);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = [0usize; 9];
        for _ in 0..9000 {
            let Action::Cell(c) = select_random(&s, &mut rng).unwrap() else { unreachable!() };
            counts[c as usize] += 1;
        }
        for c in counts {
            assert!((900..=1100).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn select_on_terminal_errors() {
        let s = ttt("XXXOO....");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_random(&s, &mut rng), Err(GameError::Terminal));
        let q = QTable::new(GameId::TicTacToe, 0.4, 0.9, 0.1);
        assert_eq!(select_q(&s, &q, &mut rng), Err(GameError::Terminal));
    }

    #[test]
    fn untrained_table_plays_uniformly() {
        let s = GameState::initial(GameId::TicTacToe);
        let q = QTable::new(GameId::TicTacToe, 0.4, 0.9, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 9];
        for _ in 0..9000 {
            let Action::Cell(c) = select_q(&s, &q, &mut rng).unwrap() else { unreachable!() };
            counts[c as usize] += 1;
        }
        assert!(counts.iter().all(|&c| (900..=1100).contains(&c)), "{counts:?}");
    }

    #[test]
    fn single_positive_value_always_chosen() {
        let s = GameState::initial(GameId::TicTacToe);
        let mut q = QTable::new(GameId::TicTacToe, 0.4, 0.9, 0.1);
        q.set(&s.key(), 9, 6, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            assert_eq!(select_q(&s, &q, &mut rng).unwrap(), Action::Cell(6));
        }
    }

    #[test]
    fn two_way_tie_splits_evenly() {
        // Binomial(1000, 0.5): sd ~15.8, so +-80 is about five sigma.
        let s = GameState::initial(GameId::TicTacToe);
        let mut q = QTable::new(GameId::TicTacToe, 0.4, 0.9, 0.1);
        q.set(&s.key(), 9, 2, 0.3);
        q.set(&s.key(), 9, 7, 0.3);
        q.set(&s.key(), 9, 4, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut first = 0;
        for _ in 0..1000 {
            match select_q(&s, &q, &mut rng).unwrap() {
                Action::Cell(2) => first += 1,
                Action::Cell(7) => {}
                other => panic!("{other:?}"),
            }
        }
        assert!((420..=580).contains(&first), "{first}");
    }

    #[test]
    fn greedy_agent_matches_table_game() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.qsnap");
        let q = QTable::new(GameId::Mancala, 0.4, 0.9, 0.1);
        snapshot::save_snapshot(&q, &path).unwrap();
        let spec = AgentSpec::QSnapshot(path);
        assert!(spec.resolve(GameId::Mancala, 0).is_ok());
        assert!(matches!(
            spec.resolve(GameId::TicTacToe, 0),
            Err(AgentError::GameMismatch { expected: GameId::TicTacToe, found: GameId::Mancala })
        ));
        let _ = Player::P1;
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn scaling_row_keeps_tie_set(
                raw in proptest::collection::vec(-4i32..4, 9),
                scale in 0.01f64..100.0,
                seed in any::<u64>(),
            ) {
                let row: Vec<f64> = raw.iter().map(|&v| f64::from(v) / 4.0).collect();
                let scaled: Vec<f64> = row.iter().map(|v| v * scale).collect();
                let a = greedy_index(Some(&row), 9, &mut ChaCha8Rng::seed_from_u64(seed));
                let b = greedy_index(Some(&scaled), 9, &mut ChaCha8Rng::seed_from_u64(seed));
                prop_assert_eq!(a, b);
            }
        }
    }
}
