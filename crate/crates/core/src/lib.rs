//! Tabular Q-learning agents for three solved board games, the minimax and
//! random opponents they learn from, weakened snapshot agents, and a
//! round-robin tournament harness to rank them.

pub mod agents;
pub mod game;
pub mod play;
pub mod seed;
pub mod snapshot;
pub mod tournament;
pub mod trainer;

pub use agents::{Agent, AgentError, AgentSpec, Heuristic, MinMax};
pub use game::{Action, GameError, GameId, GameState, Outcome, Player, StateKey, Variant};
pub use snapshot::{load_snapshot, save_snapshot, SnapshotError};
pub use tournament::{Entrant, MatchRecord, StabilityConfig, StabilityReport, TournamentTable};
pub use trainer::{EvalPoint, QTable, RewardSpec, TrainConfig, TrainingRun};
